#pragma once

#include <string>
#include <vector>

#include "refstab/analysis.hpp"
#include "refstab/ledger.hpp"
#include "refstab/model.hpp"
#include "refstab/stability.hpp"
#include "refstab/util.hpp"

namespace refstab {

/// Digest of a witness set: canonical JSON array of the sorted fingerprints.
inline Digest256 evidence_digest_of(const FingerprintSet& witness) {
    json arr = json::array();
    for (const auto& fp : witness) arr.push_back(fp);
    return digest_of(arr);
}

/// A registered security claim. The statement is opaque to the system; only
/// the referential side (identifier, context, evidence) is ever evaluated.
struct Claim {
    std::string claim_id;
    std::string statement;
    Identifier identifier;
    ContextWindow window;
    Digest256 evidence_digest{};
    FingerprintSet evidence_witness;
    Instant registered_at_ms = 0;
    std::size_t min_samples = 2;

    json to_json() const {
        json j;
        j["claim_id"] = claim_id;
        j["statement"] = statement;
        j["model"] = identifier.name;
        j["endpoint"] = identifier.endpoint;
        j["window"] = window.to_json();
        j["evidence_digest"] = to_hex(evidence_digest);
        json witness = json::array();
        for (const auto& fp : evidence_witness) witness.push_back(fp);
        j["evidence_witness"] = witness;
        j["registered_at_ms"] = registered_at_ms;
        j["min_samples"] = min_samples;
        return j;
    }

    static Claim from_json(const json& j) {
        Claim c;
        c.claim_id = j.at("claim_id").get<std::string>();
        c.statement = j.at("statement").get<std::string>();
        c.identifier.name = j.at("model").get<std::string>();
        c.identifier.endpoint = j.at("endpoint").get<std::string>();
        c.window = ContextWindow::from_json(j.at("window"));
        c.evidence_digest = digest_from_hex(j.at("evidence_digest").get<std::string>());
        for (const auto& fp : j.at("evidence_witness")) {
            c.evidence_witness.insert(fp.get<std::string>());
        }
        c.registered_at_ms = j.at("registered_at_ms").get<Instant>();
        c.min_samples = j.at("min_samples").get<std::size_t>();
        return c;
    }
};

/// Registration refused for lack of evidence; carries the observed count.
class RegistrationRefused : public std::runtime_error {
public:
    RegistrationRefused(std::size_t observed, std::size_t required)
        : std::runtime_error("registration refused: " + std::to_string(observed) +
                             " observation(s) in window, " + std::to_string(required) +
                             " required"),
          observed_(observed) {}
    std::size_t observed() const { return observed_; }

private:
    std::size_t observed_;
};

/// Records the evidence present at registration time. Registration does not
/// assert boundness; an unstable window registers fine and simply can never
/// check out as bound later.
inline Claim register_claim(const RecordSource& source, const std::string& statement,
                            const Identifier& identifier, const ContextWindow& window,
                            std::size_t min_samples = 2, Instant registered_at = 0) {
    identifier.validate();
    window.validate();
    auto records = source.query(identifier, window);
    if (records.size() < min_samples) {
        throw RegistrationRefused(records.size(), min_samples);
    }
    Claim claim;
    claim.claim_id = uuid4();
    claim.statement = statement;
    claim.identifier = identifier;
    claim.window = window;
    claim.min_samples = min_samples;
    claim.registered_at_ms = registered_at != 0 ? registered_at : now_ms();
    for (const auto& r : records) {
        auto config = resolve_once(r);
        if (config && config->fingerprint) claim.evidence_witness.insert(*config->fingerprint);
    }
    claim.evidence_digest = evidence_digest_of(claim.evidence_witness);
    return claim;
}

enum class UnboundReason { none, unstable, unresolvable, witness_changed, no_data };

inline const char* to_string(UnboundReason r) {
    switch (r) {
        case UnboundReason::none: return "none";
        case UnboundReason::unstable: return "unstable";
        case UnboundReason::unresolvable: return "unresolvable";
        case UnboundReason::witness_changed: return "witness_changed";
        case UnboundReason::no_data: return "no_data";
    }
    return "?";
}

struct BoundVerdict {
    bool bound = false;
    UnboundReason reason = UnboundReason::none;
    ResolutionVerdict at_verdict;     // the check window on its own
    ResolutionVerdict union_verdict;  // registration window through check window
};

/// Decides whether the claim still binds at the given window: bound iff the
/// check window resolves non-bottom to exactly the registered witness AND the
/// whole stretch from registration through the check window evaluates stable.
/// A single matching observation in the check window suffices to witness
/// non-bottom resolution; the stability burden (min_samples) rests on the
/// combined window. The combined window is the time hull, so configurations
/// served in between also count; once the witness has changed, later
/// agreement cannot re-bind the claim without re-registration.
inline BoundVerdict check_bound(const RecordSource& source, const Claim& claim,
                                const ContextWindow& at) {
    at.validate();
    BoundVerdict verdict;
    auto at_records = source.query(claim.identifier, at);
    if (at_records.empty()) {
        verdict.reason = UnboundReason::no_data;
        return verdict;
    }
    verdict.at_verdict = evaluate_stability(
        std::span<const ObservationRecord>(at_records.data(), at_records.size()), at,
        claim.min_samples);
    if (verdict.at_verdict.observation_count == 0) {
        verdict.reason = UnboundReason::unresolvable;
        return verdict;
    }
    if (verdict.at_verdict.witness_set != claim.evidence_witness) {
        verdict.reason = verdict.at_verdict.witness_set.size() >= 2
                             ? UnboundReason::unstable
                             : UnboundReason::witness_changed;
        return verdict;
    }
    ContextWindow combined = claim.window.hull(at);
    auto all_records = source.query(claim.identifier, combined);
    verdict.union_verdict = evaluate_stability(
        std::span<const ObservationRecord>(all_records.data(), all_records.size()), combined,
        claim.min_samples);
    switch (verdict.union_verdict.status) {
        case Resolution::stable:
            if (verdict.union_verdict.witness_set == claim.evidence_witness) {
                verdict.bound = true;
            } else {
                verdict.reason = UnboundReason::witness_changed;
            }
            break;
        case Resolution::unstable:
            verdict.reason = UnboundReason::unstable;
            break;
        case Resolution::unresolvable:
            verdict.reason = UnboundReason::unresolvable;
            break;
    }
    return verdict;
}

enum class Equivalence { consistent_with_same, distinct, inconclusive };

inline const char* to_string(Equivalence e) {
    switch (e) {
        case Equivalence::consistent_with_same: return "consistent_with_same";
        case Equivalence::distinct: return "distinct";
        case Equivalence::inconclusive: return "inconclusive";
    }
    return "?";
}

struct EquivalenceResult {
    Equivalence verdict = Equivalence::inconclusive;
    OverlapReport overlap;
    std::size_t a_resolved = 0;
    std::size_t b_resolved = 0;
    double threshold = 0.8;
};

inline constexpr double kDefaultEquivalenceThreshold = 0.8;

/// Cross-identifier comparison over one window. Deliberately never asserts
/// identity: disjoint witness sets are `distinct`, overlap at or above the
/// threshold is `consistent_with_same`, anything else (including too little
/// data) is `inconclusive`.
inline EquivalenceResult equivalence(const RecordSource& source, const Identifier& a,
                                     const Identifier& b, const ContextWindow& window,
                                     double threshold = kDefaultEquivalenceThreshold,
                                     std::size_t min_samples = 2) {
    window.validate();
    EquivalenceResult result;
    result.threshold = threshold;
    auto ra = source.query(a, window);
    auto rb = source.query(b, window);
    FingerprintHistogram ha = histogram(std::span<const ObservationRecord>(ra.data(), ra.size()));
    FingerprintHistogram hb = histogram(std::span<const ObservationRecord>(rb.data(), rb.size()));
    result.a_resolved = static_cast<std::size_t>(ha.total);
    result.b_resolved = static_cast<std::size_t>(hb.total);
    result.overlap = overlap(ha.keys(), hb.keys());
    if (result.a_resolved < min_samples || result.b_resolved < min_samples) {
        result.verdict = Equivalence::inconclusive;
        return result;
    }
    if (result.overlap.shared == 0) {
        result.verdict = Equivalence::distinct;
    } else if (result.overlap.jaccard >= threshold) {
        result.verdict = Equivalence::consistent_with_same;
    } else {
        result.verdict = Equivalence::inconclusive;
    }
    return result;
}

// Claims ride in the same ledger as observations.

inline LedgerEntry append_claim(Ledger& ledger, const Claim& claim) {
    return ledger.append(kLedgerKindClaim, claim.to_json());
}

inline std::optional<Claim> find_claim(const Ledger& ledger, const std::string& claim_id) {
    std::optional<Claim> found;
    for (const auto& record : ledger.records_of_kind(kLedgerKindClaim)) {
        if (record.value("claim_id", "") == claim_id) {
            found = Claim::from_json(record);  // latest registration wins
        }
    }
    return found;
}

/// Bundles a claim with the ledger slice backing its evidence so a third party
/// can recompute the evidence digest without the full ledger.
inline json export_claim(const Ledger& ledger, const Claim& claim) {
    json bundle;
    bundle["format"] = "refstab-claim-export";
    bundle["version"] = 1;
    bundle["claim"] = claim.to_json();
    json slice = json::array();
    for (const auto& r : ledger.query(claim.identifier, claim.window)) {
        slice.push_back(r.to_json());
    }
    bundle["evidence"] = slice;
    return bundle;
}

/// Re-derives the witness set from an exported bundle and checks it against
/// the claim's evidence digest.
inline bool verify_claim_export(const json& bundle) {
    if (bundle.value("format", "") != "refstab-claim-export") return false;
    Claim claim = Claim::from_json(bundle.at("claim"));
    FingerprintSet witness;
    for (const auto& rj : bundle.at("evidence")) {
        ObservationRecord r = ObservationRecord::from_json(rj);
        if (r.computed_digest() != r.record_digest) return false;
        auto config = resolve_once(r);
        if (config && config->fingerprint) witness.insert(*config->fingerprint);
    }
    return evidence_digest_of(witness) == claim.evidence_digest;
}

}  // namespace refstab
