#pragma once

#include <span>
#include <utility>
#include <vector>

#include "refstab/model.hpp"

namespace refstab {

enum class Resolution { stable, unstable, unresolvable };

inline const char* to_string(Resolution r) {
    switch (r) {
        case Resolution::stable: return "stable";
        case Resolution::unstable: return "unstable";
        case Resolution::unresolvable: return "unresolvable";
    }
    return "?";
}

/// Outcome of evaluating one identifier over one context window.
///
/// observation_count counts the in-window observations that carried a usable
/// fingerprint; null_count the ones that did not. A window whose usable count
/// is below min_samples cannot witness stability and is reported unresolvable.
struct ResolutionVerdict {
    Resolution status = Resolution::unresolvable;
    FingerprintSet witness_set;
    std::size_t observation_count = 0;
    std::size_t null_count = 0;
};

/// Decision procedure for the stability predicate:
///   unstable      iff two or more distinct fingerprints are witnessed,
///   stable        iff exactly one is, by at least min_samples observations,
///   unresolvable  otherwise (no usable observations, or too few).
/// Pure in its inputs.
inline ResolutionVerdict evaluate_stability(
    std::span<const std::pair<ObservationContext, ConfigurationObservation>> observations,
    const ContextWindow& window, std::size_t min_samples = 2) {
    window.validate();
    ResolutionVerdict v;
    for (const auto& [ctx, config] : observations) {
        if (!window.contains(ctx)) continue;
        if (config.resolved()) {
            v.witness_set.insert(*config.fingerprint);
            ++v.observation_count;
        } else {
            ++v.null_count;
        }
    }
    if (v.witness_set.size() >= 2) {
        v.status = Resolution::unstable;
    } else if (v.witness_set.size() == 1 && v.observation_count >= min_samples) {
        v.status = Resolution::stable;
    } else {
        v.status = Resolution::unresolvable;
    }
    return v;
}

/// Projects a record onto the configuration it observed; a transport/HTTP
/// failure or a missing fingerprint yields nothing. Total over well-formed
/// records.
inline std::optional<ConfigurationObservation> resolve_once(const ObservationRecord& record) {
    if (!record.success()) return std::nullopt;
    if (!record.fingerprint) return std::nullopt;
    return ConfigurationObservation{record.fingerprint, record.response_digest};
}

inline ResolutionVerdict evaluate_stability(std::span<const ObservationRecord> records,
                                            const ContextWindow& window,
                                            std::size_t min_samples = 2) {
    std::vector<std::pair<ObservationContext, ConfigurationObservation>> obs;
    obs.reserve(records.size());
    for (const auto& r : records) {
        auto config = resolve_once(r);
        obs.emplace_back(r.context,
                         config ? *config : ConfigurationObservation{std::nullopt, {}});
    }
    return evaluate_stability(obs, window, min_samples);
}

}  // namespace refstab
