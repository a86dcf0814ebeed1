#pragma once

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "refstab/canonical.hpp"
#include "refstab/digest.hpp"
#include "refstab/model.hpp"
#include "refstab/util.hpp"

namespace refstab::sim {

enum class RegimeKind {
    pinned_stable,
    rotating_pool,
    drift,
    alias_routed,
    context_dependent,
    concealed_update,
};

inline const char* to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::pinned_stable: return "pinned_stable";
        case RegimeKind::rotating_pool: return "rotating_pool";
        case RegimeKind::drift: return "drift";
        case RegimeKind::alias_routed: return "alias_routed";
        case RegimeKind::context_dependent: return "context_dependent";
        case RegimeKind::concealed_update: return "concealed_update";
    }
    return "?";
}

inline RegimeKind regime_kind_from_string(const std::string& s) {
    if (s == "pinned_stable") return RegimeKind::pinned_stable;
    if (s == "rotating_pool") return RegimeKind::rotating_pool;
    if (s == "drift") return RegimeKind::drift;
    if (s == "alias_routed") return RegimeKind::alias_routed;
    if (s == "context_dependent") return RegimeKind::context_dependent;
    if (s == "concealed_update") return RegimeKind::concealed_update;
    throw std::invalid_argument("unknown regime kind '" + s + "'");
}

struct WeightedFingerprint {
    std::string fingerprint;
    double weight = 1.0;
};

using Pool = std::vector<WeightedFingerprint>;

struct ScheduleStep {
    Instant at_ms = 0;
    Pool pool;
};

/// Alias routing: requests for `from` draw from the leading `fraction` share
/// of `to`'s pool entries plus the alias's own extra entries. With enough
/// samples the expected witness coverage of the target pool equals `fraction`.
struct AliasRule {
    std::string from;
    std::string to;
    double fraction = 1.0;
    Pool extra_pool;
};

/// Context-dependent serving: the first rule whose tags match wins.
struct ContextRule {
    std::optional<std::string> account_tag;
    std::optional<std::string> region_tag;
    Pool pool;
};

/// Concealed update: probes whose prompt digest is on the public list keep
/// getting the pinned fingerprint, everything else follows the schedule.
struct ConcealedRule {
    std::set<std::string> public_prompt_digests;  // hex
    std::string pinned_fingerprint;
};

inline Pool pool_from_json(const json& j) {
    Pool p;
    for (const auto& e : j) {
        WeightedFingerprint wf;
        if (e.is_string()) {
            wf.fingerprint = e.get<std::string>();
        } else {
            wf.fingerprint = e.at("fingerprint").get<std::string>();
            wf.weight = e.value("weight", 1.0);
        }
        p.push_back(std::move(wf));
    }
    return p;
}

inline json pool_to_json(const Pool& p) {
    json out = json::array();
    for (const auto& wf : p) {
        json e;
        e["fingerprint"] = wf.fingerprint;
        e["weight"] = wf.weight;
        out.push_back(e);
    }
    return out;
}

/// A scriptable serving regime. Loaded from a JSON config file; see
/// docs in the README for the documented format.
struct RegimeSpec {
    RegimeKind kind = RegimeKind::pinned_stable;
    std::int64_t seed = 0;
    Pool pool;
    std::vector<ScheduleStep> schedule;
    AliasRule alias;
    std::vector<ContextRule> context_rules;
    ConcealedRule concealed;

    void validate() const {
        if (pool.empty()) throw std::invalid_argument("regime pool must be non-empty");
        for (const auto& wf : pool) check_weight(wf);
        Instant prev = std::numeric_limits<Instant>::min();
        for (const auto& step : schedule) {
            if (step.at_ms <= prev) {
                throw std::invalid_argument("schedule instants must be strictly increasing");
            }
            prev = step.at_ms;
            if (step.pool.empty()) throw std::invalid_argument("scheduled pool must be non-empty");
            for (const auto& wf : step.pool) check_weight(wf);
        }
        if (kind == RegimeKind::alias_routed) {
            if (alias.from.empty() || alias.to.empty()) {
                throw std::invalid_argument("alias_routed needs alias.from and alias.to");
            }
            if (!(alias.fraction >= 0.0 && alias.fraction <= 1.0)) {
                throw std::invalid_argument("alias routing fraction must lie in [0,1]");
            }
            for (const auto& wf : alias.extra_pool) check_weight(wf);
        }
        if (kind == RegimeKind::concealed_update && concealed.pinned_fingerprint.empty()) {
            throw std::invalid_argument("concealed_update needs a pinned fingerprint");
        }
    }

    json to_json() const {
        json j;
        j["kind"] = to_string(kind);
        j["seed"] = seed;
        j["pool"] = pool_to_json(pool);
        if (!schedule.empty()) {
            json s = json::array();
            for (const auto& step : schedule) {
                json e;
                e["at_ms"] = step.at_ms;
                e["pool"] = pool_to_json(step.pool);
                s.push_back(e);
            }
            j["schedule"] = s;
        }
        if (kind == RegimeKind::alias_routed) {
            json a;
            a["from"] = alias.from;
            a["to"] = alias.to;
            a["fraction"] = alias.fraction;
            a["extra_pool"] = pool_to_json(alias.extra_pool);
            j["alias"] = a;
        }
        if (!context_rules.empty()) {
            json rules = json::array();
            for (const auto& r : context_rules) {
                json e;
                if (r.account_tag) e["account_tag"] = *r.account_tag;
                if (r.region_tag) e["region_tag"] = *r.region_tag;
                e["pool"] = pool_to_json(r.pool);
                rules.push_back(e);
            }
            j["context_rules"] = rules;
        }
        if (kind == RegimeKind::concealed_update) {
            json c;
            c["public_prompt_digests"] = json(concealed.public_prompt_digests);
            c["pinned_fingerprint"] = concealed.pinned_fingerprint;
            j["concealed"] = c;
        }
        return j;
    }

    static RegimeSpec from_json(const json& j) {
        RegimeSpec spec;
        spec.kind = regime_kind_from_string(j.at("kind").get<std::string>());
        spec.seed = j.value("seed", std::int64_t(0));
        spec.pool = pool_from_json(j.at("pool"));
        if (j.contains("schedule")) {
            for (const auto& e : j.at("schedule")) {
                spec.schedule.push_back({e.at("at_ms").get<Instant>(),
                                         pool_from_json(e.at("pool"))});
            }
        }
        if (j.contains("alias")) {
            const auto& a = j.at("alias");
            spec.alias.from = a.at("from").get<std::string>();
            spec.alias.to = a.at("to").get<std::string>();
            spec.alias.fraction = a.value("fraction", 1.0);
            if (a.contains("extra_pool")) spec.alias.extra_pool = pool_from_json(a.at("extra_pool"));
        }
        if (j.contains("context_rules")) {
            for (const auto& e : j.at("context_rules")) {
                ContextRule r;
                if (e.contains("account_tag")) r.account_tag = e.at("account_tag").get<std::string>();
                if (e.contains("region_tag")) r.region_tag = e.at("region_tag").get<std::string>();
                r.pool = pool_from_json(e.at("pool"));
                spec.context_rules.push_back(std::move(r));
            }
        }
        if (j.contains("concealed")) {
            const auto& c = j.at("concealed");
            for (const auto& d : c.at("public_prompt_digests")) {
                spec.concealed.public_prompt_digests.insert(d.get<std::string>());
            }
            spec.concealed.pinned_fingerprint = c.at("pinned_fingerprint").get<std::string>();
        }
        spec.validate();
        return spec;
    }

    static RegimeSpec load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open regime file " + path);
        return from_json(json::parse(in));
    }

private:
    static void check_weight(const WeightedFingerprint& wf) {
        if (!(wf.weight > 0.0) || !std::isfinite(wf.weight)) {
            throw std::invalid_argument("pool weights must be positive and finite");
        }
        if (wf.fingerprint.empty()) {
            throw std::invalid_argument("pool fingerprints must be non-empty");
        }
    }
};

/// What the simulator knew when it answered one request: the ground truth the
/// analyzers are checked against.
struct Emission {
    std::uint64_t index = 0;
    std::string model;
    std::string prompt_digest;  // hex
    std::string fingerprint;
    std::string account_tag;
    std::string region_tag;
    Instant virtual_ms = 0;
    int pool_epoch = 0;  // schedule steps applied at emission time

    json to_json() const {
        json j;
        j["index"] = index;
        j["model"] = model;
        j["prompt_digest"] = prompt_digest;
        j["fingerprint"] = fingerprint;
        j["account_tag"] = account_tag;
        j["region_tag"] = region_tag;
        j["virtual_ms"] = virtual_ms;
        j["pool_epoch"] = pool_epoch;
        return j;
    }

    static Emission from_json(const json& j) {
        Emission e;
        e.index = j.at("index").get<std::uint64_t>();
        e.model = j.at("model").get<std::string>();
        e.prompt_digest = j.at("prompt_digest").get<std::string>();
        e.fingerprint = j.at("fingerprint").get<std::string>();
        e.account_tag = j.value("account_tag", "");
        e.region_tag = j.value("region_tag", "");
        e.virtual_ms = j.at("virtual_ms").get<Instant>();
        e.pool_epoch = j.at("pool_epoch").get<int>();
        return e;
    }
};

struct SimRequest {
    std::string model;
    std::string prompt;
    std::string account_tag;
    std::string region_tag;
};

/// Pure regime mechanics, usable without the HTTP layer. Emissions are a
/// deterministic function of (regime, seed, request index, request content,
/// virtual time), so identical request sequences replay identically.
class RegimeEngine {
public:
    explicit RegimeEngine(RegimeSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    const RegimeSpec& spec() const { return spec_; }

    /// Replaces the regime in place; the request counter and the emission log
    /// keep running so ground truth stays continuous across the swap.
    void swap_regime(RegimeSpec spec) {
        spec.validate();
        std::lock_guard lock(mu_);
        spec_ = std::move(spec);
        ++swap_generation_;
    }

    Emission emit(const SimRequest& req, Instant virtual_now) {
        std::lock_guard lock(mu_);
        Emission e;
        e.index = next_index_++;
        e.model = req.model;
        e.prompt_digest = to_hex(sha256(req.prompt));
        e.account_tag = req.account_tag;
        e.region_tag = req.region_tag;
        e.virtual_ms = virtual_now;

        const Pool* pool = &spec_.pool;
        int epoch = 0;
        for (const auto& step : spec_.schedule) {
            if (step.at_ms <= virtual_now) {
                pool = &step.pool;
                ++epoch;
            } else {
                break;
            }
        }
        // regime swaps count as configuration changes too
        e.pool_epoch = epoch + 1000 * swap_generation_;

        switch (spec_.kind) {
            case RegimeKind::pinned_stable:
                e.fingerprint = spec_.pool.front().fingerprint;
                break;
            case RegimeKind::rotating_pool:
            case RegimeKind::drift:
                e.fingerprint = draw(*pool, e.index);
                break;
            case RegimeKind::alias_routed: {
                if (req.model == spec_.alias.from) {
                    Pool routed = alias_pool(*pool);
                    e.fingerprint = draw(routed, e.index);
                } else {
                    e.fingerprint = draw(*pool, e.index);
                }
                break;
            }
            case RegimeKind::context_dependent: {
                const Pool* chosen = pool;
                for (const auto& rule : spec_.context_rules) {
                    bool account_ok = !rule.account_tag || *rule.account_tag == req.account_tag;
                    bool region_ok = !rule.region_tag || *rule.region_tag == req.region_tag;
                    if (account_ok && region_ok) {
                        chosen = &rule.pool;
                        break;
                    }
                }
                e.fingerprint = draw(*chosen, e.index);
                break;
            }
            case RegimeKind::concealed_update: {
                if (spec_.concealed.public_prompt_digests.count(e.prompt_digest)) {
                    e.fingerprint = spec_.concealed.pinned_fingerprint;
                } else {
                    e.fingerprint = draw(*pool, e.index);
                }
                break;
            }
        }
        emissions_.push_back(e);
        return e;
    }

    std::vector<Emission> emissions_snapshot() const {
        std::lock_guard lock(mu_);
        return emissions_;
    }

    std::uint64_t request_count() const {
        std::lock_guard lock(mu_);
        return next_index_;
    }

private:
    /// Uniform draw in [0,1) derived from (seed, index): reproducible no
    /// matter how requests interleave.
    double uniform(std::uint64_t index) const {
        json material;
        material["seed"] = spec_.seed;
        material["index"] = index;
        material["purpose"] = "draw";
        Digest256 d = digest_of(material);
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i) x = (x << 8) | d[static_cast<std::size_t>(i)];
        return static_cast<double>(x) / 18446744073709551616.0;  // 2^64
    }

    std::string draw(const Pool& pool, std::uint64_t index) const {
        double total = 0.0;
        for (const auto& wf : pool) total += wf.weight;
        double target = uniform(index) * total;
        double acc = 0.0;
        for (const auto& wf : pool) {
            acc += wf.weight;
            if (target < acc) return wf.fingerprint;
        }
        return pool.back().fingerprint;
    }

    /// Leading `fraction` share of the target pool plus alias-only entries.
    Pool alias_pool(const Pool& target) const {
        Pool routed;
        std::size_t take = static_cast<std::size_t>(
            std::ceil(spec_.alias.fraction * static_cast<double>(target.size())));
        for (std::size_t i = 0; i < take && i < target.size(); ++i) routed.push_back(target[i]);
        for (const auto& wf : spec_.alias.extra_pool) routed.push_back(wf);
        if (routed.empty()) routed = target;
        return routed;
    }

    mutable std::mutex mu_;
    RegimeSpec spec_;
    std::uint64_t next_index_ = 0;
    int swap_generation_ = 0;
    std::vector<Emission> emissions_;
};

struct SimOptions {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    std::string emission_log_path;  // optional JSONL sink for ground truth
    int force_http_status = 0;      // when set, every completion request fails with it
};

/// Local HTTP service speaking the completions wire protocol with scriptable
/// fingerprint regimes. Admin routes (off the completion path) allow tests and
/// operators to move virtual time, swap the regime, and read ground truth.
class SimProvider {
public:
    SimProvider(RegimeSpec regime, SimOptions options = {})
        : engine_(std::move(regime)), options_(std::move(options)) {
        virtual_ms_.store(-1);
        force_status_.store(options_.force_http_status);
        routes();
    }

    ~SimProvider() { stop(); }

    /// Binds and serves on a background thread. Throws when the address is not
    /// bindable.
    void start() {
        if (options_.port == 0) {
            port_ = server_.bind_to_any_port(options_.host);
            if (port_ < 0) throw std::runtime_error("simulator cannot bind " + options_.host);
        } else {
            if (!server_.bind_to_port(options_.host, options_.port)) {
                throw std::runtime_error("simulator cannot bind " + options_.host + ":" +
                                         std::to_string(options_.port));
            }
            port_ = options_.port;
        }
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    std::string url() const {
        return "http://" + options_.host + ":" + std::to_string(port_);
    }

    RegimeEngine& engine() { return engine_; }

    void set_virtual_time(Instant ms) { virtual_ms_.store(ms); }
    void set_force_status(int status) { force_status_.store(status); }
    void swap_regime(RegimeSpec spec) { engine_.swap_regime(std::move(spec)); }

    Instant now() const {
        Instant v = virtual_ms_.load();
        return v >= 0 ? v : now_ms();
    }

private:
    void routes() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            int fail = force_status_.load();
            if (fail != 0) {
                res.status = fail;
                res.set_content("{\"error\":{\"message\":\"scripted failure\"}}",
                                "application/json");
                return;
            }
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("model") || !body.contains("messages")) {
                res.status = 400;
                res.set_content("{\"error\":{\"message\":\"malformed request\"}}",
                                "application/json");
                return;
            }
            SimRequest sr;
            sr.model = body.at("model").get<std::string>();
            for (const auto& m : body.at("messages")) {
                if (m.value("role", "") == "user") sr.prompt = m.value("content", "");
            }
            sr.account_tag = req.get_header_value("X-Account-Tag");
            sr.region_tag = req.get_header_value("X-Region-Tag");

            Emission e = engine_.emit(sr, now());
            log_emission(e);

            json id_material;
            id_material["seed"] = engine_.spec().seed;
            id_material["index"] = e.index;
            json reply;
            reply["id"] = "chatcmpl-" + to_hex(digest_of(id_material)).substr(0, 24);
            reply["object"] = "chat.completion";
            reply["created"] = e.virtual_ms / 1000;
            reply["model"] = sr.model;
            reply["system_fingerprint"] = e.fingerprint;
            json msg;
            msg["role"] = "assistant";
            msg["content"] = "resp-" + e.prompt_digest.substr(0, 16);
            json choice;
            choice["index"] = 0;
            choice["message"] = msg;
            choice["finish_reason"] = "stop";
            reply["choices"] = json::array({choice});
            res.set_content(reply.dump(), "application/json");
        });

        server_.Post("/admin/clock", [this](const httplib::Request& req, httplib::Response& res) {
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("virtual_ms")) {
                res.status = 400;
                return;
            }
            set_virtual_time(body.at("virtual_ms").get<Instant>());
            res.set_content("{\"ok\":true}", "application/json");
        });

        server_.Post("/admin/regime", [this](const httplib::Request& req, httplib::Response& res) {
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded()) {
                res.status = 400;
                return;
            }
            try {
                swap_regime(RegimeSpec::from_json(body));
            } catch (const std::exception& e) {
                res.status = 400;
                json err;
                err["error"] = e.what();
                res.set_content(err.dump(), "application/json");
                return;
            }
            res.set_content("{\"ok\":true}", "application/json");
        });

        server_.Post("/admin/fail", [this](const httplib::Request& req, httplib::Response& res) {
            json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.contains("status")) {
                res.status = 400;
                return;
            }
            set_force_status(body.at("status").get<int>());
            res.set_content("{\"ok\":true}", "application/json");
        });

        server_.Get("/admin/emissions", [this](const httplib::Request&, httplib::Response& res) {
            std::string out;
            for (const auto& e : engine_.emissions_snapshot()) {
                out += e.to_json().dump();
                out += '\n';
            }
            res.set_content(out, "application/jsonl");
        });

        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok", "text/plain");
        });
    }

    void log_emission(const Emission& e) {
        if (options_.emission_log_path.empty()) return;
        std::lock_guard lock(log_mu_);
        std::ofstream out(options_.emission_log_path, std::ios::app);
        out << e.to_json().dump() << "\n";
    }

    RegimeEngine engine_;
    SimOptions options_;
    httplib::Server server_;
    std::thread thread_;
    std::atomic<Instant> virtual_ms_{-1};
    std::atomic<int> force_status_{0};
    std::mutex log_mu_;
    int port_ = -1;
};

/// One analyzer decision over a pair of emission-index windows, half-open.
struct WindowVerdictRecord {
    std::uint64_t a_begin = 0, a_end = 0;
    std::uint64_t b_begin = 0, b_end = 0;
    bool flagged = false;
};

struct AgreementReport {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t true_negative = 0;
    std::size_t false_negative = 0;

    std::size_t total() const {
        return true_positive + false_positive + true_negative + false_negative;
    }
    double agreement() const {
        std::size_t t = total();
        return t == 0 ? 1.0
                      : static_cast<double>(true_positive + true_negative) /
                            static_cast<double>(t);
    }
};

/// Confusion counts of analyzer verdicts against the simulator's own record of
/// which configuration epoch served each request. A verdict referencing
/// indices outside the log is an input error.
inline AgreementReport ground_truth_diff(std::span<const Emission> emissions,
                                         std::span<const WindowVerdictRecord> verdicts) {
    AgreementReport report;
    auto epochs_in = [&](std::uint64_t begin, std::uint64_t end) {
        if (begin > end || end > emissions.size()) {
            throw std::invalid_argument("verdict window exceeds emission log");
        }
        std::set<int> epochs;
        for (std::uint64_t i = begin; i < end; ++i) {
            epochs.insert(emissions[static_cast<std::size_t>(i)].pool_epoch);
        }
        return epochs;
    };
    for (const auto& v : verdicts) {
        bool changed = epochs_in(v.a_begin, v.a_end) != epochs_in(v.b_begin, v.b_end);
        if (changed && v.flagged) ++report.true_positive;
        else if (!changed && v.flagged) ++report.false_positive;
        else if (changed && !v.flagged) ++report.false_negative;
        else ++report.true_negative;
    }
    return report;
}

inline std::vector<Emission> emissions_from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open emission log " + path);
    std::vector<Emission> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(Emission::from_json(json::parse(line)));
    }
    return out;
}

}  // namespace refstab::sim
