#pragma once

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "refstab/model.hpp"
#include "refstab/stability.hpp"
#include "refstab/util.hpp"

namespace refstab {

class CampaignConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters of one measurement campaign: repeated identical requests against
/// one identifier. Everything the provider could legitimately key on is held
/// constant for the whole campaign.
struct CampaignSpec {
    Identifier identifier;
    std::string prompt = "Say the word ping.";
    double temperature = 0.0;
    std::int64_t seed = 0;
    std::int64_t max_tokens = 16;
    std::uint64_t repetitions = 100;
    std::size_t max_in_flight = 4;
    std::int64_t inter_request_delay_ms = 0;
    std::string auth_token_ref;  // name of the env var holding the bearer token
    std::string account_tag;
    std::string region_tag;
    std::string path = "/v1/chat/completions";

    void validate() const {
        identifier.validate();
        if (repetitions < 1) throw CampaignConfigError("repetitions must be >= 1");
        if (max_in_flight < 1) throw CampaignConfigError("max_in_flight must be >= 1");
        if (max_tokens < 1) throw CampaignConfigError("max_tokens must be >= 1");
        if (prompt.empty()) throw CampaignConfigError("prompt must be non-empty");
    }
};

struct CampaignSummary {
    std::string campaign_id;
    std::uint64_t requested = 0;
    std::uint64_t delivered = 0;
    std::uint64_t successes = 0;  // records with a usable configuration token
    std::uint64_t failures = 0;   // transport/HTTP failures or missing token
    std::int64_t wall_ms = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Single-consumer, in-order record consumer.
using RecordSink = std::function<void(const ObservationRecord&)>;

/// Pulls the provider-reported configuration token out of a completions-style
/// response body. Absent, null, non-string or empty values map to nothing;
/// malformed bodies never throw.
inline std::optional<std::string> extract_fingerprint(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    auto it = j.find("system_fingerprint");
    if (it == j.end() || !it->is_string()) return std::nullopt;
    std::string value = it->get<std::string>();
    if (value.empty()) return std::nullopt;
    return value;
}

namespace detail {
/// Splits an absolute URL into scheme://authority and path. A path on the
/// endpoint overrides the campaign's default completion path.
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint,
                                                          const std::string& default_path) {
    auto scheme_end = endpoint.find("://");
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, default_path};
    std::string base = endpoint.substr(0, path_start);
    std::string path = endpoint.substr(path_start);
    if (path == "/") path = default_path;
    return {base, path};
}
}  // namespace detail

/// Runs one campaign: exactly spec.repetitions records reach the sink in
/// sequence order, failures included as data. Requests are issued with at most
/// max_in_flight outstanding and spec.inter_request_delay_ms between
/// dispatches; record timestamps are the scheduled dispatch instants, so they
/// are monotone in sequence number.
inline CampaignSummary run_campaign(const CampaignSpec& spec, const RecordSink& sink) {
    spec.validate();
    std::string bearer;
    if (!spec.auth_token_ref.empty()) {
        const char* token = std::getenv(spec.auth_token_ref.c_str());
        if (token == nullptr || *token == '\0') {
            throw CampaignConfigError("auth token variable '" + spec.auth_token_ref +
                                      "' is not set in the environment");
        }
        bearer = token;
    }

    auto [base, path] = detail::split_endpoint(spec.identifier.endpoint, spec.path);

    json body_json;
    body_json["model"] = spec.identifier.name;
    json msg;
    msg["role"] = "user";
    msg["content"] = spec.prompt;
    body_json["messages"] = json::array({msg});
    body_json["temperature"] = spec.temperature;
    body_json["seed"] = spec.seed;
    body_json["max_tokens"] = spec.max_tokens;
    const std::string body = canonical_dump(body_json);  // identical bytes every request

    const Digest256 request_digest = request_digest_of(
        spec.identifier.name, spec.prompt, spec.seed, spec.temperature, spec.max_tokens);
    const Digest256 prompt_digest = sha256(spec.prompt);

    CampaignSummary summary;
    summary.campaign_id = uuid4();
    summary.requested = spec.repetitions;
    const Instant started = now_ms();

    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
    if (!spec.account_tag.empty()) headers.emplace("X-Account-Tag", spec.account_tag);
    if (!spec.region_tag.empty()) headers.emplace("X-Region-Tag", spec.region_tag);

    std::mutex dispatch_mu;
    std::uint64_t next_seq = 0;
    Instant next_allowed = now_ms();
    bool abort = false;

    std::mutex delivery_mu;
    std::map<std::uint64_t, ObservationRecord> pending;
    std::uint64_t next_deliver = 0;

    auto worker = [&] {
        httplib::Client client(base);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(30, 0);
        for (;;) {
            std::uint64_t seq;
            Instant scheduled;
            {
                std::lock_guard lock(dispatch_mu);
                if (abort || next_seq >= spec.repetitions) break;
                seq = next_seq++;
                scheduled = std::max(now_ms(), next_allowed);
                next_allowed = scheduled + spec.inter_request_delay_ms;
            }
            Instant wait = scheduled - now_ms();
            if (wait > 0) std::this_thread::sleep_for(std::chrono::milliseconds(wait));

            auto t0 = std::chrono::steady_clock::now();
            httplib::Result res = client.Post(path, headers, body, "application/json");
            auto t1 = std::chrono::steady_clock::now();

            ObservationRecord record;
            record.campaign_id = summary.campaign_id;
            record.sequence_no = seq;
            record.identifier = spec.identifier;
            record.context.timestamp_ms = scheduled;
            record.context.account_tag = spec.account_tag;
            record.context.region_tag = spec.region_tag;
            record.context.request_digest = request_digest;
            record.prompt_digest = prompt_digest;
            record.latency_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
            if (res) {
                record.http_status = res->status;
                record.fingerprint = extract_fingerprint(res->body);
                record.response_digest = sha256(res->body);
            } else {
                record.http_status = 0;  // transport failure marker
                record.response_digest = sha256(std::string_view{});
            }
            record.seal();

            std::lock_guard lock(delivery_mu);
            {
                std::lock_guard dlock(dispatch_mu);
                if (abort) break;
            }
            pending.emplace(seq, std::move(record));
            while (true) {
                auto it = pending.find(next_deliver);
                if (it == pending.end()) break;
                try {
                    sink(it->second);
                } catch (const std::exception& e) {
                    std::lock_guard dlock(dispatch_mu);
                    abort = true;
                    summary.aborted = true;
                    summary.abort_reason = e.what();
                    pending.clear();
                    break;
                }
                ++summary.delivered;
                if (resolve_once(it->second).has_value()) {
                    ++summary.successes;
                } else {
                    ++summary.failures;
                }
                pending.erase(it);
                ++next_deliver;
            }
        }
    };

    std::size_t n_workers = static_cast<std::size_t>(
        std::min<std::uint64_t>(spec.max_in_flight, spec.repetitions));
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    summary.wall_ms = now_ms() - started;
    return summary;
}

}  // namespace refstab
