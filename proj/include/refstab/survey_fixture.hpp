#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "refstab/ledger.hpp"
#include "refstab/model.hpp"

namespace refstab {

/// Shape of one identifier in the bundled synthetic survey ledger.
struct SurveyModelShape {
    std::string name;
    std::size_t unique = 0;          // distinct fingerprints
    std::uint64_t modal_count = 0;   // observations carried by the top fingerprint
    std::uint64_t heavy_count = 0;   // per-fingerprint count for the first heavy_n rest
    std::size_t heavy_n = 0;
    std::uint64_t light_count = 0;   // per-fingerprint count for the remaining rest
};

/// The synthetic two-month survey: six identifiers, 11600 observations each,
/// with the unique-fingerprint counts, modal shares and the two overlap
/// structures the analytics suite is checked against. Deterministic per seed.
struct SurveySpec {
    static constexpr std::uint64_t kObservationsPerModel = 11600;

    std::vector<SurveyModelShape> models = {
        {"gpt-4.1", 223, 835, 49, 109, 48},
        {"gpt-4.1-2025-04-14", 163, 974, 66, 96, 65},
        {"gpt-4o", 137, 1206, 77, 58, 76},
        {"gpt-4o-2024-05-13", 37, 2181, 262, 23, 261},
        {"gpt-4o-2024-08-06", 129, 1183, 82, 49, 81},
        {"gpt-4o-2024-11-20", 77, 1717, 131, 3, 130},
    };
    // shared unique-fingerprint blocks: (alias, pinned, shared count)
    std::size_t shared_41 = 156;   // gpt-4.1 ∩ gpt-4.1-2025-04-14
    std::size_t shared_4o = 121;   // gpt-4o ∩ gpt-4o-2024-08-06
};

namespace survey_detail {

inline std::string token(const std::string& role, std::size_t i) {
    json material;
    material["fixture"] = "survey";
    material["role"] = role;
    material["index"] = i;
    return "fp_" + to_hex(digest_of(material)).substr(0, 12);
}

inline std::vector<std::string> tokens(const std::string& role, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(token(role, i));
    return out;
}

}  // namespace survey_detail

/// The fingerprint universe of each survey identifier. Pools are built from
/// role-salted token blocks so exactly two pairs intersect:
///   gpt-4.1 ∩ gpt-4.1-2025-04-14 = 156, gpt-4o ∩ gpt-4o-2024-08-06 = 121,
/// and the two remaining snapshots share nothing with anyone.
inline std::vector<std::vector<std::string>> survey_pools(const SurveySpec& spec = {}) {
    using survey_detail::tokens;
    auto shared41 = tokens("shared-41", spec.shared_41);
    auto shared4o = tokens("shared-4o", spec.shared_4o);
    auto ex41 = tokens("only-41-alias", spec.models[0].unique - spec.shared_41);
    auto ex41d = tokens("only-41-dated", spec.models[1].unique - spec.shared_41);
    auto ex4o = tokens("only-4o-alias", spec.models[2].unique - spec.shared_4o);
    auto ex4o5 = tokens("only-4o-0513", spec.models[3].unique);
    auto ex4o8 = tokens("only-4o-0806", spec.models[4].unique - spec.shared_4o);
    auto ex4o11 = tokens("only-4o-1120", spec.models[5].unique);

    auto join = [](std::vector<std::string> a, const std::vector<std::string>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    return {
        join(shared41, ex41),   // gpt-4.1
        join(shared41, ex41d),  // gpt-4.1-2025-04-14
        join(shared4o, ex4o),   // gpt-4o
        ex4o5,                  // gpt-4o-2024-05-13
        join(shared4o, ex4o8),  // gpt-4o-2024-08-06
        ex4o11,                 // gpt-4o-2024-11-20
    };
}

/// Appends the whole survey to the ledger: 6 x 11600 observation records in
/// campaigns of 100, evenly spread over a two-month window starting at
/// start_ms. Counts are exact by construction; only the ordering is shuffled.
inline void build_survey_ledger(Ledger& ledger, Instant start_ms = 1772236800000 /* 2026-03-01 */,
                                std::uint64_t seed = 1, const SurveySpec& spec = {}) {
    auto pools = survey_pools(spec);
    constexpr Instant kTwoMonthsMs = 61LL * 24 * 3600 * 1000;
    const Instant spacing = kTwoMonthsMs / SurveySpec::kObservationsPerModel;

    for (std::size_t m = 0; m < spec.models.size(); ++m) {
        const auto& shape = spec.models[m];
        const auto& pool = pools[m];

        std::vector<std::string> stream;
        stream.reserve(SurveySpec::kObservationsPerModel);
        for (std::uint64_t i = 0; i < shape.modal_count; ++i) stream.push_back(pool[0]);
        for (std::size_t k = 0; k < shape.heavy_n; ++k) {
            for (std::uint64_t i = 0; i < shape.heavy_count; ++i) stream.push_back(pool[1 + k]);
        }
        for (std::size_t k = 1 + shape.heavy_n; k < shape.unique; ++k) {
            for (std::uint64_t i = 0; i < shape.light_count; ++i) stream.push_back(pool[k]);
        }
        if (pool.size() != shape.unique || stream.size() != SurveySpec::kObservationsPerModel) {
            throw std::logic_error("survey shape arithmetic is off for " + shape.name);
        }
        std::mt19937_64 rng(seed * 1000 + m);
        std::shuffle(stream.begin(), stream.end(), rng);

        const Digest256 request_digest =
            request_digest_of(shape.name, "static survey prompt", 0, 0.0, 16);
        const Digest256 prompt_digest = sha256("static survey prompt");

        for (std::uint64_t i = 0; i < stream.size(); ++i) {
            ObservationRecord r;
            r.campaign_id = "survey-" + shape.name + "-" + std::to_string(i / 100);
            r.sequence_no = i % 100;
            r.identifier = {shape.name, "https://api.example.com/v1"};
            r.context.timestamp_ms = start_ms + static_cast<Instant>(i) * spacing;
            r.context.account_tag = "survey-account";
            r.context.region_tag = "us";
            r.context.request_digest = request_digest;
            r.prompt_digest = prompt_digest;
            r.fingerprint = stream[i];
            r.response_digest = sha256(stream[i]);
            r.http_status = 200;
            r.latency_ms = 120;
            // append() computes and stores the record digest from canonical bytes
            ledger.append(kLedgerKindObservation, r.to_json());
        }
    }
}

}  // namespace refstab
