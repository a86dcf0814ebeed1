#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "refstab/analysis.hpp"
#include "refstab/model.hpp"

namespace refstab {

/// Shipped default drift threshold. Calibrated against the simulator's
/// stationary rotating-pool regime (the `calibrate` CLI subcommand reproduces
/// the run); see README for the calibration numbers behind this constant.
inline constexpr double kDefaultDriftThreshold = 0.05;

/// Jensen-Shannon divergence between the normalized frequency distributions of
/// two histograms, base-2 logarithm, so the value lies in [0, 1]. Bounded,
/// symmetric, and defined on disjoint supports.
inline double divergence(const FingerprintHistogram& baseline,
                         const FingerprintHistogram& current) {
    if (baseline.total == 0 || current.total == 0) {
        throw std::domain_error("divergence over an empty histogram");
    }
    double out = 0.0;
    auto it_p = baseline.counts.begin();
    auto it_q = current.counts.begin();
    auto term = [](double x, double m) { return x > 0.0 ? x * std::log2(x / m) : 0.0; };
    while (it_p != baseline.counts.end() || it_q != current.counts.end()) {
        double p = 0.0, q = 0.0;
        bool take_p = it_q == current.counts.end() ||
                      (it_p != baseline.counts.end() && it_p->first <= it_q->first);
        bool take_q = it_p == baseline.counts.end() ||
                      (it_q != current.counts.end() && it_q->first <= it_p->first);
        if (take_p && take_q) {  // same key
            p = static_cast<double>(it_p->second) / static_cast<double>(baseline.total);
            q = static_cast<double>(it_q->second) / static_cast<double>(current.total);
            ++it_p;
            ++it_q;
        } else if (take_p) {
            p = static_cast<double>(it_p->second) / static_cast<double>(baseline.total);
            ++it_p;
        } else {
            q = static_cast<double>(it_q->second) / static_cast<double>(current.total);
            ++it_q;
        }
        double m = 0.5 * (p + q);
        out += 0.5 * term(p, m) + 0.5 * term(q, m);
    }
    if (out < 0.0) out = 0.0;
    if (out > 1.0) out = 1.0;
    return out;
}

/// A probe prompt; its digest is the identity probes are tracked by.
struct ProbeSpec {
    std::string prompt;
    Digest256 digest() const { return sha256(prompt); }
};

/// Published and secret probe prompts. The public subset supports open
/// verification; the private subset rotates and acts as a canary against
/// providers that adapt to the published probes.
struct ProbeSplit {
    std::vector<ProbeSpec> public_probes;
    std::vector<ProbeSpec> private_probes;
    std::int64_t rotation_period_ms = 0;  // 0 disables rotation
    std::int64_t rotation_seed = 0;
    std::int64_t epoch = 0;
    Instant last_rotation_ms = 0;
    std::set<std::string> retired_digests;  // hex; retired canaries are never reused

    std::set<std::string> public_digests() const { return digests_of(public_probes); }
    std::set<std::string> private_digests() const { return digests_of(private_probes); }

    void validate() const {
        auto pub = public_digests();
        for (const auto& d : private_digests()) {
            if (pub.count(d)) {
                throw std::invalid_argument("public and private probes must be disjoint");
            }
        }
    }

    json to_json() const {
        json j;
        j["public_prompts"] = json::array();
        for (const auto& p : public_probes) j["public_prompts"].push_back(p.prompt);
        j["private_prompts"] = json::array();
        for (const auto& p : private_probes) j["private_prompts"].push_back(p.prompt);
        j["rotation_period_ms"] = rotation_period_ms;
        j["rotation_seed"] = rotation_seed;
        j["epoch"] = epoch;
        j["last_rotation_ms"] = last_rotation_ms;
        j["retired_digests"] = json(retired_digests);
        return j;
    }

    static ProbeSplit from_json(const json& j) {
        ProbeSplit s;
        for (const auto& p : j.at("public_prompts")) s.public_probes.push_back({p.get<std::string>()});
        for (const auto& p : j.at("private_prompts")) s.private_probes.push_back({p.get<std::string>()});
        s.rotation_period_ms = j.value("rotation_period_ms", std::int64_t(0));
        s.rotation_seed = j.value("rotation_seed", std::int64_t(0));
        s.epoch = j.value("epoch", std::int64_t(0));
        s.last_rotation_ms = j.value("last_rotation_ms", std::int64_t(0));
        if (j.contains("retired_digests")) {
            for (const auto& d : j.at("retired_digests")) s.retired_digests.insert(d.get<std::string>());
        }
        s.validate();
        return s;
    }

    static ProbeSplit load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open probe split file " + path);
        return from_json(json::parse(in));
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write probe split file " + path);
        out << to_json().dump(2) << "\n";
    }

private:
    static std::set<std::string> digests_of(const std::vector<ProbeSpec>& probes) {
        std::set<std::string> out;
        for (const auto& p : probes) out.insert(to_hex(p.digest()));
        return out;
    }
};

/// Replaces the private probes with fresh canaries derived from the rotation
/// seed and epoch index once the rotation period has elapsed. The public set
/// never changes here, and retired prompts are recorded so they cannot recur.
inline ProbeSplit rotate(const ProbeSplit& split, Instant now) {
    if (split.rotation_period_ms <= 0 ||
        now - split.last_rotation_ms < split.rotation_period_ms) {
        return split;
    }
    ProbeSplit next = split;
    for (const auto& d : split.private_digests()) next.retired_digests.insert(d);
    next.epoch = split.epoch + 1;
    next.last_rotation_ms = now;
    next.private_probes.clear();
    auto pub = split.public_digests();
    std::size_t i = 0;
    while (next.private_probes.size() < split.private_probes.size()) {
        json seed_material;
        seed_material["seed"] = split.rotation_seed;
        seed_material["epoch"] = next.epoch;
        seed_material["index"] = i++;
        std::string token = to_hex(digest_of(seed_material)).substr(0, 16);
        ProbeSpec probe{"canary probe " + token};
        std::string d = to_hex(probe.digest());
        if (pub.count(d) || next.retired_digests.count(d)) continue;  // never reuse
        next.private_probes.push_back(std::move(probe));
    }
    next.validate();
    return next;
}

enum class DriftStatus { consistent, drift, adaptation_suspected, inconclusive };

inline const char* to_string(DriftStatus s) {
    switch (s) {
        case DriftStatus::consistent: return "consistent";
        case DriftStatus::drift: return "drift";
        case DriftStatus::adaptation_suspected: return "adaptation_suspected";
        case DriftStatus::inconclusive: return "inconclusive";
    }
    return "?";
}

struct DriftVerdict {
    DriftStatus status = DriftStatus::inconclusive;
    double public_divergence = 0.0;
    double private_divergence = 0.0;
    double threshold = kDefaultDriftThreshold;
    std::size_t baseline_n = 0;
    std::size_t current_n = 0;
};

/// One observation attributed to a probe prompt.
struct ProbeObservation {
    Digest256 prompt_digest{};
    std::optional<std::string> fingerprint;
};

inline ProbeObservation probe_observation_of(const ObservationRecord& r) {
    auto config = resolve_once(r);
    return {r.prompt_digest, config ? config->fingerprint : std::nullopt};
}

/// Splits both windows by probe subset, computes per-subset divergences and
/// applies the verdict truth table:
///   drift                 public divergence above threshold
///   adaptation_suspected  public at or below, private above
///   consistent            both at or below
/// Any subset with fewer than min_samples usable observations in either window
/// makes the verdict inconclusive rather than silently passing.
inline DriftVerdict assess(std::span<const ProbeObservation> baseline,
                           std::span<const ProbeObservation> current,
                           const ProbeSplit& split, double threshold = kDefaultDriftThreshold,
                           std::size_t min_samples = 2) {
    split.validate();
    auto pub = split.public_digests();
    auto prv = split.private_digests();
    FingerprintHistogram base_pub, base_prv, cur_pub, cur_prv;
    auto fill = [&](std::span<const ProbeObservation> obs, FingerprintHistogram& hp,
                    FingerprintHistogram& hq) {
        for (const auto& o : obs) {
            std::string d = to_hex(o.prompt_digest);
            if (pub.count(d)) {
                hp.add(o.fingerprint);
            } else if (prv.count(d)) {
                hq.add(o.fingerprint);
            }
        }
    };
    fill(baseline, base_pub, base_prv);
    fill(current, cur_pub, cur_prv);

    DriftVerdict v;
    v.threshold = threshold;
    v.baseline_n = static_cast<std::size_t>(base_pub.total + base_prv.total);
    v.current_n = static_cast<std::size_t>(cur_pub.total + cur_prv.total);
    if (base_pub.total < min_samples || base_prv.total < min_samples ||
        cur_pub.total < min_samples || cur_prv.total < min_samples) {
        v.status = DriftStatus::inconclusive;
        return v;
    }
    v.public_divergence = divergence(base_pub, cur_pub);
    v.private_divergence = divergence(base_prv, cur_prv);
    if (v.public_divergence > threshold) {
        v.status = DriftStatus::drift;
    } else if (v.private_divergence > threshold) {
        v.status = DriftStatus::adaptation_suspected;
    } else {
        v.status = DriftStatus::consistent;
    }
    return v;
}

/// Empirical null quantile of the divergence statistic over pairs of windows
/// drawn from one stationary distribution; the calibration behind the default
/// threshold. `draw` must return a fingerprint for a (pair, window, index)
/// triple, typically backed by the simulator.
inline double calibrate_null_quantile(
    const std::function<std::string(std::size_t pair, int window, std::size_t index)>& draw,
    std::size_t n_pairs, std::size_t window_size, double quantile) {
    std::vector<double> divs;
    divs.reserve(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        FingerprintHistogram a, b;
        for (std::size_t i = 0; i < window_size; ++i) {
            a.add(draw(p, 0, i));
            b.add(draw(p, 1, i));
        }
        divs.push_back(divergence(a, b));
    }
    std::sort(divs.begin(), divs.end());
    if (divs.empty()) throw std::domain_error("no calibration samples");
    double pos = quantile * static_cast<double>(divs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, divs.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return divs[lo] * (1.0 - frac) + divs[hi] * frac;
}

}  // namespace refstab
