#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "refstab/canonical.hpp"
#include "refstab/digest.hpp"
#include "refstab/util.hpp"

namespace refstab {

/// Unique fingerprint strings observed for one identifier.
using FingerprintSet = std::set<std::string>;

inline bool is_absolute_url(std::string_view s) {
    auto pos = s.find("://");
    if (pos == std::string_view::npos || pos == 0) return false;
    for (char c : s.substr(0, pos)) {
        bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        bool extra = (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.';
        if (!alpha && !extra) return false;
    }
    return pos + 3 < s.size();
}

/// A reference to a hosted system: the public name requests are routed by,
/// plus the serving endpoint the name is observed through.
struct Identifier {
    std::string name;
    std::string endpoint;

    void validate() const {
        if (name.empty()) {
            throw std::invalid_argument("identifier name must be non-empty");
        }
        if (!is_absolute_url(endpoint)) {
            throw std::invalid_argument("identifier endpoint must be an absolute URL: '" +
                                        endpoint + "'");
        }
    }
};

/// Where and when a single observation was made.
struct ObservationContext {
    Instant timestamp_ms = 0;
    std::string account_tag;
    std::string region_tag;
    Digest256 request_digest{};
};

/// A closed time interval plus optional tag filters; the predicate side of
/// "stability is always relative to a context".
struct ContextWindow {
    Instant start_ms = 0;
    Instant end_ms = 0;
    std::optional<std::string> account_tag;
    std::optional<std::string> region_tag;

    void validate() const {
        if (start_ms > end_ms) {
            throw std::invalid_argument("context window start is after end");
        }
    }

    bool contains(const ObservationContext& c) const {
        if (c.timestamp_ms < start_ms || c.timestamp_ms > end_ms) return false;
        if (account_tag && *account_tag != c.account_tag) return false;
        if (region_tag && *region_tag != c.region_tag) return false;
        return true;
    }

    /// Smallest window covering both operands on the time axis. Tag filters of
    /// *this* window are kept; the combined window is used when a claim's
    /// registration context is extended to a later check window.
    ContextWindow hull(const ContextWindow& other) const {
        ContextWindow out = *this;
        out.start_ms = std::min(start_ms, other.start_ms);
        out.end_ms = std::max(end_ms, other.end_ms);
        return out;
    }

    json to_json() const {
        json j;
        j["start_ms"] = start_ms;
        j["end_ms"] = end_ms;
        j["account_tag"] = account_tag ? json(*account_tag) : json(nullptr);
        j["region_tag"] = region_tag ? json(*region_tag) : json(nullptr);
        return j;
    }

    static ContextWindow from_json(const json& j) {
        ContextWindow w;
        w.start_ms = j.at("start_ms").get<Instant>();
        w.end_ms = j.at("end_ms").get<Instant>();
        if (j.contains("account_tag") && !j.at("account_tag").is_null()) {
            w.account_tag = j.at("account_tag").get<std::string>();
        }
        if (j.contains("region_tag") && !j.at("region_tag").is_null()) {
            w.region_tag = j.at("region_tag").get<std::string>();
        }
        w.validate();
        return w;
    }
};

/// What one probe saw of the serving configuration. An absent fingerprint is
/// the no-metadata case and never counts as a configuration of its own.
struct ConfigurationObservation {
    std::optional<std::string> fingerprint;
    Digest256 response_digest{};

    bool resolved() const { return fingerprint.has_value(); }
};

/// One probe result, the unit the ledger stores. record_digest covers the
/// canonical serialization of every other field.
struct ObservationRecord {
    std::string campaign_id;
    std::uint64_t sequence_no = 0;
    Identifier identifier;
    ObservationContext context;
    Digest256 prompt_digest{};
    std::optional<std::string> fingerprint;
    Digest256 response_digest{};
    int http_status = 0;  // 0 marks a transport-level failure
    std::int64_t latency_ms = 0;
    Digest256 record_digest{};

    bool success() const { return http_status >= 200 && http_status < 300; }

    json to_json() const {
        json j;
        j["campaign_id"] = campaign_id;
        j["sequence_no"] = sequence_no;
        j["model"] = identifier.name;
        j["endpoint"] = identifier.endpoint;
        j["timestamp_ms"] = context.timestamp_ms;
        j["account_tag"] = context.account_tag;
        j["region_tag"] = context.region_tag;
        j["request_digest"] = to_hex(context.request_digest);
        j["prompt_digest"] = to_hex(prompt_digest);
        j["fingerprint"] = fingerprint ? json(*fingerprint) : json(nullptr);
        j["response_digest"] = to_hex(response_digest);
        j["http_status"] = http_status;
        j["latency_ms"] = latency_ms;
        j["record_digest"] = to_hex(record_digest);
        return j;
    }

    static ObservationRecord from_json(const json& j) {
        ObservationRecord r;
        r.campaign_id = j.at("campaign_id").get<std::string>();
        r.sequence_no = j.at("sequence_no").get<std::uint64_t>();
        r.identifier.name = j.at("model").get<std::string>();
        r.identifier.endpoint = j.at("endpoint").get<std::string>();
        r.context.timestamp_ms = j.at("timestamp_ms").get<Instant>();
        r.context.account_tag = j.at("account_tag").get<std::string>();
        r.context.region_tag = j.at("region_tag").get<std::string>();
        r.context.request_digest = digest_from_hex(j.at("request_digest").get<std::string>());
        r.prompt_digest = digest_from_hex(j.at("prompt_digest").get<std::string>());
        if (!j.at("fingerprint").is_null()) {
            auto fp = j.at("fingerprint").get<std::string>();
            if (!fp.empty()) r.fingerprint = fp;
        }
        r.response_digest = digest_from_hex(j.at("response_digest").get<std::string>());
        r.http_status = j.at("http_status").get<int>();
        r.latency_ms = j.at("latency_ms").get<std::int64_t>();
        r.record_digest = digest_from_hex(j.at("record_digest").get<std::string>());
        return r;
    }

    /// Digest recomputed from the current field values.
    Digest256 computed_digest() const { return record_digest_of(to_json()); }

    void seal() { record_digest = computed_digest(); }
};

/// Canonical request bytes: the five client-controlled parameters, key-sorted
/// and whitespace-free. Identical parameters yield identical digests, which is
/// what lets observed variance be attributed to the provider side.
inline Digest256 request_digest_of(const std::string& model, const std::string& prompt,
                                   std::int64_t seed, double temperature,
                                   std::int64_t max_tokens) {
    json j;
    j["model"] = model;
    j["prompt"] = prompt;
    j["seed"] = seed;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    return digest_of(j);
}

}  // namespace refstab
