// refstab: probe hosted endpoints, keep tamper-evident observation ledgers,
// report fingerprint diversity/overlap, check claims, verify attestations and
// run the local simulator.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "refstab/refstab.hpp"
#include "refstab/survey_fixture.hpp"

using namespace refstab;
namespace fs = std::filesystem;

namespace {

// Exit codes, disjoint per failure class (see README):
//   0 success / positive verdict      2 usage or configuration error
//   3 input parse/format error        4 negative verification outcome
//   1 unexpected internal error
constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;
constexpr int kParse = 3;
constexpr int kNegative = 4;

struct EndpointProfile {
    std::string name;
    std::string model;
    std::string endpoint;
    std::string auth_env;
    std::string account_tag;
    std::string region_tag;
};

struct CliConfig {
    std::string ledger;
    std::string format = "text";
    std::size_t min_samples = 2;
    double drift_threshold = kDefaultDriftThreshold;
    double equivalence_threshold = kDefaultEquivalenceThreshold;
    std::vector<EndpointProfile> profiles;

    static CliConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path);
        json j = json::parse(in);
        CliConfig c;
        c.ledger = j.value("ledger", "");
        c.format = j.value("format", "text");
        c.min_samples = j.value("min_samples", std::size_t(2));
        c.drift_threshold = j.value("drift_threshold", kDefaultDriftThreshold);
        c.equivalence_threshold =
            j.value("equivalence_threshold", kDefaultEquivalenceThreshold);
        std::set<std::string> names;
        if (j.contains("profiles")) {
            for (const auto& p : j.at("profiles")) {
                EndpointProfile prof;
                prof.name = p.at("name").get<std::string>();
                prof.model = p.at("model").get<std::string>();
                prof.endpoint = p.at("endpoint").get<std::string>();
                prof.auth_env = p.value("auth_env", "");
                prof.account_tag = p.value("account_tag", "");
                prof.region_tag = p.value("region_tag", "");
                if (!names.insert(prof.name).second) {
                    throw std::runtime_error("duplicate profile name '" + prof.name + "'");
                }
                c.profiles.push_back(std::move(prof));
            }
        }
        return c;
    }

    const EndpointProfile* find(const std::string& name) const {
        for (const auto& p : profiles) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }
};

ContextWindow window_from_flags(const std::string& from, const std::string& to) {
    ContextWindow w;
    w.start_ms = parse_instant(from);
    w.end_ms = parse_instant(to);
    w.validate();
    return w;
}

json verdict_base(const std::string& command) {
    json v;
    v["command"] = command;
    v["checked_at_ms"] = now_ms();
    return v;
}

int run_probe(const std::string& ledger_path, const CampaignSpec& spec) {
    auto ledger = Ledger::open_rw(ledger_path);
    auto summary = run_campaign(
        spec, [&](const ObservationRecord& r) { ledger.append_observation(r); });
    std::cout << "campaign " << summary.campaign_id << ": " << summary.delivered << "/"
              << summary.requested << " records (" << summary.successes << " resolved, "
              << summary.failures << " failed) in " << summary.wall_ms << " ms\n";
    std::cout << "ledger " << ledger_path << " now holds " << ledger.size() << " entries\n";
    if (summary.aborted) {
        std::cerr << "aborted: " << summary.abort_reason << "\n";
        return kInternal;
    }
    return kOk;
}

int run_report(const std::string& ledger_path, const std::string& from, const std::string& to,
               const std::vector<std::string>& models, const std::string& format) {
    auto ledger = Ledger::open_ro(ledger_path);
    ContextWindow window{std::numeric_limits<Instant>::min(),
                         std::numeric_limits<Instant>::max()};
    if (!from.empty()) window.start_ms = parse_instant(from);
    if (!to.empty()) window.end_ms = parse_instant(to);
    window.validate();

    std::map<std::string, std::vector<ObservationRecord>> by_id;
    ledger.for_each_observation([&](const ObservationRecord& r) {
        if (!window.contains(r.context)) return;
        if (!models.empty() &&
            std::find(models.begin(), models.end(), r.identifier.name) == models.end()) {
            return;
        }
        by_id[r.identifier.name].push_back(r);
    });
    if (by_id.empty()) {
        std::cerr << "no observations match the selection\n";
        return kUsage;
    }
    auto report = diversity_report(by_id);
    if (format == "json") {
        std::cout << diversity_report_to_json(report).dump(2) << "\n";
    } else {
        std::cout << diversity_report_to_text(report);
    }
    return kOk;
}

int run_claim_register(const std::string& ledger_path, const std::string& statement,
                       const Identifier& identifier, const ContextWindow& window,
                       std::size_t min_samples) {
    auto ledger = Ledger::open_rw(ledger_path);
    Claim claim;
    try {
        claim = register_claim(ledger, statement, identifier, window, min_samples);
    } catch (const RegistrationRefused& e) {
        std::cerr << e.what() << "\n";
        return kNegative;
    }
    append_claim(ledger, claim);
    std::cout << "claim " << claim.claim_id << " registered\n";
    std::cout << "evidence: " << claim.evidence_witness.size() << " fingerprint(s), digest "
              << to_hex(claim.evidence_digest) << "\n";
    return kOk;
}

int run_claim_check(const std::string& ledger_path, const std::string& claim_id,
                    const ContextWindow& at) {
    auto ledger = Ledger::open_rw(ledger_path);
    auto claim = find_claim(ledger, claim_id);
    if (!claim) {
        std::cerr << "claim " << claim_id << " not found in ledger\n";
        return kParse;
    }
    auto verdict = check_bound(ledger, *claim, at);

    json v = verdict_base("claim-check");
    v["claim_id"] = claim_id;
    v["window"] = at.to_json();
    v["bound"] = verdict.bound;
    v["reason"] = to_string(verdict.reason);
    ledger.append(kLedgerKindVerdict, v);

    if (verdict.bound) {
        std::cout << "bound\n";
        return kOk;
    }
    std::cout << "unbound (" << to_string(verdict.reason) << ")\n";
    return kNegative;
}

int run_claim_equivalence(const std::string& ledger_path, const std::string& model_a,
                          const std::string& model_b, const ContextWindow& window,
                          double threshold, std::size_t min_samples) {
    auto ledger = Ledger::open_rw(ledger_path);
    Identifier a{model_a, "http://unspecified.invalid/"};
    Identifier b{model_b, "http://unspecified.invalid/"};
    auto result = equivalence(ledger, a, b, window, threshold, min_samples);

    json v = verdict_base("claim-equivalence");
    v["model_a"] = model_a;
    v["model_b"] = model_b;
    v["window"] = window.to_json();
    v["verdict"] = to_string(result.verdict);
    v["jaccard"] = result.overlap.jaccard;
    v["shared"] = result.overlap.shared;
    v["threshold"] = threshold;
    ledger.append(kLedgerKindVerdict, v);

    std::cout << to_string(result.verdict) << "  (jaccard "
              << format_jaccard(result.overlap.jaccard) << " vs threshold " << threshold
              << ", shared " << result.overlap.shared << ", A resolved " << result.a_resolved
              << ", B resolved " << result.b_resolved << ")\n";
    return kOk;
}

int run_claim_export(const std::string& ledger_path, const std::string& claim_id,
                     const std::string& out_path) {
    auto ledger = Ledger::open_ro(ledger_path);
    auto claim = find_claim(ledger, claim_id);
    if (!claim) {
        std::cerr << "claim " << claim_id << " not found in ledger\n";
        return kParse;
    }
    auto bundle = export_claim(ledger, *claim);
    write_json_file(out_path, bundle);
    std::cout << "exported claim + " << bundle.at("evidence").size() << " evidence records to "
              << out_path << "\n";
    return kOk;
}

PublicKey root_pubkey_from(const std::string& arg) {
    std::string hex = arg;
    if (fs::exists(arg)) {
        std::ifstream in(arg);
        hex.clear();
        in >> hex;
    }
    return bytes_from_hex<crypto_sign_PUBLICKEYBYTES>(hex);
}

int run_attest_verify(const std::string& report_path, const std::string& response_path,
                      const std::string& root_pub_arg, const std::string& ledger_path) {
    AttestationReport report;
    SignedResponse signed_response;
    PublicKey root_pub;
    try {
        report = AttestationReport::from_json(read_json_file(report_path));
        signed_response = SignedResponse::from_json(read_json_file(response_path));
        root_pub = root_pubkey_from(root_pub_arg);
    } catch (const std::exception& e) {
        std::cerr << "cannot parse attestation inputs: " << e.what() << "\n";
        return kParse;
    }
    auto result = verify(signed_response, report, root_pub);

    if (!ledger_path.empty()) {
        auto ledger = Ledger::open_rw(ledger_path);
        json v = verdict_base("attest-verify");
        v["verified"] = result.verified;
        v["reason"] = to_string(result.reason);
        v["manifest_digest"] = to_hex(report.manifest_digest);
        ledger.append(kLedgerKindVerdict, v);
    }

    if (result.verified) {
        std::cout << "verified " << to_hex(result.manifest_digest) << "\n";
        return kOk;
    }
    std::cout << "rejected (" << to_string(result.reason) << ")\n";
    return kNegative;
}

int run_attest_demo(const std::string& dir) {
    fs::create_directories(dir);
    auto root = RootKeypair::generate();
    ConfigurationManifest manifest;
    manifest.weights_digest = sha256("demo weights blob");
    manifest.system_prompt_digest = sha256("demo system prompt");
    manifest.serving_code_digest = sha256("demo serving build");
    manifest.inference_params = {{"temperature", "0"}, {"max_tokens", "16"}};
    manifest.created_at_ms = now_ms();

    auto commitment = commit(manifest, root);
    std::string response_text = "demo completion output";
    auto signed_response = commitment.keyholder->sign_response(response_text);

    auto p = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
    {
        std::ofstream out(p("root_pub.hex"));
        out << bytes_to_hex(root.pub) << "\n";
    }
    {
        std::ofstream out(p("response.txt"));
        out << response_text;
    }
    write_json_file(p("manifest.json"), manifest.to_json());
    write_json_file(p("report.json"), commitment.report.to_json());
    write_json_file(p("signed_response.json"), signed_response.to_json());
    std::cout << "wrote root_pub.hex, manifest.json, report.json, response.txt, "
                 "signed_response.json to "
              << dir << "\n";
    std::cout << "verify with: refstab attest verify --report " << p("report.json")
              << " --response " << p("signed_response.json") << " --root-pub "
              << p("root_pub.hex") << "\n";
    return kOk;
}

int run_ledger_verify(const std::string& ledger_path) {
    auto ledger = Ledger::open_ro(ledger_path);
    std::size_t entries = 0;
    try {
        ledger.for_each([&](std::size_t, const LedgerEntry&) { ++entries; });
    } catch (const LedgerIntegrityError& e) {
        std::cout << "corrupt at entry " << e.index() << "\n";
        return kNegative;
    }
    std::cout << "ok (" << entries << " entries)\n";
    return kOk;
}

int run_drift_assess(const std::string& ledger_path, const std::string& model,
                     const std::string& split_path, const ContextWindow& baseline,
                     const ContextWindow& current, double threshold,
                     std::size_t min_samples) {
    auto split = ProbeSplit::load(split_path);
    auto ledger = Ledger::open_rw(ledger_path);
    Identifier id{model, "http://unspecified.invalid/"};
    auto to_probe_obs = [&](const ContextWindow& w) {
        std::vector<ProbeObservation> out;
        for (const auto& r : ledger.query(id, w)) out.push_back(probe_observation_of(r));
        return out;
    };
    auto baseline_obs = to_probe_obs(baseline);
    auto current_obs = to_probe_obs(current);
    auto verdict = assess(baseline_obs, current_obs, split, threshold, min_samples);

    json v = verdict_base("drift-assess");
    v["model"] = model;
    v["status"] = to_string(verdict.status);
    v["public_divergence"] = verdict.public_divergence;
    v["private_divergence"] = verdict.private_divergence;
    v["threshold"] = verdict.threshold;
    v["baseline_n"] = verdict.baseline_n;
    v["current_n"] = verdict.current_n;
    ledger.append(kLedgerKindVerdict, v);

    std::cout << to_string(verdict.status) << "  (public " << verdict.public_divergence
              << ", private " << verdict.private_divergence << ", threshold "
              << verdict.threshold << ", n " << verdict.baseline_n << "/"
              << verdict.current_n << ")\n";
    return kOk;
}

int run_sim(const std::string& regime_path, const std::string& host, int port,
            const std::string& emissions_path, int fail_status) {
    auto regime = sim::RegimeSpec::load(regime_path);
    sim::SimOptions options;
    options.host = host;
    options.port = port;
    options.emission_log_path = emissions_path;
    options.force_http_status = fail_status;
    sim::SimProvider provider(std::move(regime), options);
    provider.start();
    std::cout << "simulated provider on " << provider.url()
              << " (POST /v1/chat/completions; admin: /admin/regime /admin/clock "
                 "/admin/fail /admin/emissions)\n"
              << std::flush;
    for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
    return kOk;
}

int run_calibrate(int pool_size, std::size_t window, std::size_t pairs, std::int64_t seed) {
    sim::RegimeSpec spec;
    spec.kind = sim::RegimeKind::rotating_pool;
    spec.seed = seed;
    for (int i = 0; i < pool_size; ++i) spec.pool.push_back({"fp_" + std::to_string(i), 1.0});

    std::cout << "null divergence over " << pairs << " stationary window pairs (pool "
              << pool_size << ", window " << window << ", seed " << seed << ")\n";
    for (double q : {0.50, 0.90, 0.95, 0.99, 1.0}) {
        sim::RegimeEngine engine(spec);
        auto draw = [&](std::size_t, int, std::size_t) {
            return engine.emit({"calibration", "p", "", ""}, 0).fingerprint;
        };
        double value = calibrate_null_quantile(draw, pairs, window, q);
        std::printf("  p%-5.1f %.5f\n", q * 100.0, value);
    }
    std::cout << "shipped default threshold: " << kDefaultDriftThreshold << "\n";
    return kOk;
}

int run_fixture(const std::string& ledger_path, std::uint64_t seed) {
    if (fs::exists(ledger_path) && fs::file_size(ledger_path) > 0) {
        std::cerr << "refusing to write the fixture into existing non-empty " << ledger_path
                  << "\n";
        return kUsage;
    }
    auto ledger = Ledger::open_rw(ledger_path);
    build_survey_ledger(ledger, 1772236800000, seed);
    std::cout << "survey fixture written: " << ledger.size() << " entries in " << ledger_path
              << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"referential stability toolkit for hosted AI endpoints"};
    app.require_subcommand(1);

    std::string config_path, profile_name;
    app.add_option("--config", config_path, "CLI config file (JSON)");

    // probe
    auto* probe = app.add_subcommand("probe", "run a measurement campaign and append records");
    std::string p_ledger, p_model, p_endpoint, p_prompt = "Say the word ping.";
    std::string p_auth, p_account, p_region;
    std::uint64_t p_n = 100;
    std::int64_t p_seed = 0, p_max_tokens = 16, p_delay = 0;
    std::size_t p_inflight = 4;
    double p_temperature = 0.0;
    probe->add_option("--ledger", p_ledger, "ledger file");
    probe->add_option("--profile", profile_name, "endpoint profile from --config");
    probe->add_option("--model", p_model, "requested model name");
    probe->add_option("--endpoint", p_endpoint, "absolute URL of the serving API");
    probe->add_option("-n,--n", p_n, "repetitions (default 100)");
    probe->add_option("--prompt", p_prompt, "static prompt");
    probe->add_option("--seed", p_seed, "request seed parameter");
    probe->add_option("--temperature", p_temperature, "request temperature");
    probe->add_option("--max-tokens", p_max_tokens, "request max_tokens");
    probe->add_option("--max-in-flight", p_inflight, "outstanding request budget");
    probe->add_option("--delay-ms", p_delay, "delay between dispatches");
    probe->add_option("--auth-env", p_auth, "env var holding the bearer token");
    probe->add_option("--account-tag", p_account, "context tag recorded with each record");
    probe->add_option("--region-tag", p_region, "context tag recorded with each record");

    // report
    auto* report = app.add_subcommand("report", "diversity and overlap report");
    std::string r_ledger, r_from, r_to, r_format;
    std::vector<std::string> r_models;
    report->add_option("--ledger", r_ledger, "ledger file");
    report->add_option("--window-from", r_from, "window start (ms or ISO-8601)");
    report->add_option("--window-to", r_to, "window end (ms or ISO-8601)");
    report->add_option("--model", r_models, "restrict to these model names");
    report->add_option("--format", r_format, "text or json");

    // claim
    auto* claim = app.add_subcommand("claim", "register and evaluate claims");
    claim->require_subcommand(1);
    std::string c_ledger, c_statement, c_model, c_endpoint = "https://api.example.com/v1";
    std::string c_from, c_to, c_claim_id, c_model_a, c_model_b, c_out;
    std::size_t c_min_samples = 0;
    double c_threshold = -1.0;

    auto* c_register = claim->add_subcommand("register", "record a claim with its evidence");
    c_register->add_option("--ledger", c_ledger, "ledger file");
    c_register->add_option("--statement", c_statement, "substantive claim text (opaque)")
        ->required();
    c_register->add_option("--model", c_model, "identifier name")->required();
    c_register->add_option("--endpoint", c_endpoint, "identifier endpoint URL");
    c_register->add_option("--window-from", c_from)->required();
    c_register->add_option("--window-to", c_to)->required();
    c_register->add_option("--min-samples", c_min_samples);

    auto* c_check = claim->add_subcommand("check", "is the claim still bound?");
    c_check->add_option("--ledger", c_ledger, "ledger file");
    c_check->add_option("--claim-id", c_claim_id)->required();
    c_check->add_option("--window-from", c_from)->required();
    c_check->add_option("--window-to", c_to)->required();

    auto* c_equiv = claim->add_subcommand("equivalence", "compare two identifiers");
    c_equiv->add_option("--ledger", c_ledger, "ledger file");
    c_equiv->add_option("--model-a", c_model_a)->required();
    c_equiv->add_option("--model-b", c_model_b)->required();
    c_equiv->add_option("--window-from", c_from)->required();
    c_equiv->add_option("--window-to", c_to)->required();
    c_equiv->add_option("--threshold", c_threshold, "jaccard threshold");
    c_equiv->add_option("--min-samples", c_min_samples);

    auto* c_export = claim->add_subcommand("export", "bundle claim + evidence slice");
    c_export->add_option("--ledger", c_ledger, "ledger file");
    c_export->add_option("--claim-id", c_claim_id)->required();
    c_export->add_option("--out", c_out, "output file")->required();

    // attest
    auto* attest = app.add_subcommand("attest", "attestation verification");
    attest->require_subcommand(1);
    std::string a_report, a_response, a_root, a_ledger, a_dir;
    auto* a_verify = attest->add_subcommand("verify", "verify a signed response");
    a_verify->add_option("--report", a_report, "attestation report file")->required();
    a_verify->add_option("--response", a_response, "signed response file")->required();
    a_verify->add_option("--root-pub", a_root, "root public key (hex file or literal)")
        ->required();
    a_verify->add_option("--ledger", a_ledger, "append the verdict to this ledger");
    auto* a_demo = attest->add_subcommand("demo", "generate a demo attestation chain");
    a_demo->add_option("--dir", a_dir, "output directory")->required();

    // ledger
    auto* ledger_cmd = app.add_subcommand("ledger", "ledger maintenance");
    ledger_cmd->require_subcommand(1);
    std::string l_ledger;
    auto* l_verify = ledger_cmd->add_subcommand("verify", "verify the hash chain");
    l_verify->add_option("--ledger", l_ledger, "ledger file");

    // drift
    auto* drift = app.add_subcommand("drift", "drift detection");
    drift->require_subcommand(1);
    std::string d_ledger, d_model, d_split, d_bfrom, d_bto, d_cfrom, d_cto;
    double d_threshold = -1.0;
    std::size_t d_min_samples = 0;
    auto* d_assess = drift->add_subcommand("assess", "compare two windows per probe subset");
    d_assess->add_option("--ledger", d_ledger, "ledger file");
    d_assess->add_option("--model", d_model)->required();
    d_assess->add_option("--split", d_split, "probe split file")->required();
    d_assess->add_option("--baseline-from", d_bfrom)->required();
    d_assess->add_option("--baseline-to", d_bto)->required();
    d_assess->add_option("--current-from", d_cfrom)->required();
    d_assess->add_option("--current-to", d_cto)->required();
    d_assess->add_option("--threshold", d_threshold);
    d_assess->add_option("--min-samples", d_min_samples);

    // sim
    auto* sim_cmd = app.add_subcommand("sim", "run the scripted local provider");
    std::string s_regime, s_host = "127.0.0.1", s_emissions;
    int s_port = 8089, s_fail = 0;
    sim_cmd->add_option("--regime", s_regime, "regime spec file")->required();
    sim_cmd->add_option("--host", s_host);
    sim_cmd->add_option("--port", s_port);
    sim_cmd->add_option("--emissions", s_emissions, "ground-truth JSONL sink");
    sim_cmd->add_option("--fail-status", s_fail, "force this HTTP status on completions");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "null-divergence quantiles");
    int cal_pool = 5;
    std::size_t cal_window = 200, cal_pairs = 1000;
    std::int64_t cal_seed = 1;
    calibrate->add_option("--pool-size", cal_pool);
    calibrate->add_option("--window", cal_window);
    calibrate->add_option("--pairs", cal_pairs);
    calibrate->add_option("--seed", cal_seed);

    // fixture
    auto* fixture = app.add_subcommand("fixture", "write the bundled synthetic survey ledger");
    std::string f_ledger;
    std::uint64_t f_seed = 1;
    fixture->add_option("--ledger", f_ledger, "output ledger file")->required();
    fixture->add_option("--seed", f_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        CliConfig config;
        if (!config_path.empty()) config = CliConfig::load(config_path);
        auto ledger_or = [&](const std::string& flag_value) {
            if (!flag_value.empty()) return flag_value;
            if (!config.ledger.empty()) return config.ledger;
            throw std::invalid_argument("no ledger given (--ledger or config)");
        };
        std::size_t min_samples_or = c_min_samples > 0 ? c_min_samples : config.min_samples;

        if (probe->parsed()) {
            CampaignSpec spec;
            if (!profile_name.empty()) {
                const auto* prof = config.find(profile_name);
                if (!prof) throw std::invalid_argument("unknown profile '" + profile_name + "'");
                spec.identifier = {prof->model, prof->endpoint};
                spec.auth_token_ref = prof->auth_env;
                spec.account_tag = prof->account_tag;
                spec.region_tag = prof->region_tag;
            }
            if (!p_model.empty()) spec.identifier.name = p_model;
            if (!p_endpoint.empty()) spec.identifier.endpoint = p_endpoint;
            if (!p_auth.empty()) spec.auth_token_ref = p_auth;
            if (!p_account.empty()) spec.account_tag = p_account;
            if (!p_region.empty()) spec.region_tag = p_region;
            spec.prompt = p_prompt;
            spec.repetitions = p_n;
            spec.seed = p_seed;
            spec.temperature = p_temperature;
            spec.max_tokens = p_max_tokens;
            spec.max_in_flight = p_inflight;
            spec.inter_request_delay_ms = p_delay;
            return run_probe(ledger_or(p_ledger), spec);
        }
        if (report->parsed()) {
            std::string format = !r_format.empty() ? r_format : config.format;
            if (format != "text" && format != "json") {
                throw std::invalid_argument("--format must be text or json");
            }
            return run_report(ledger_or(r_ledger), r_from, r_to, r_models, format);
        }
        if (c_register->parsed()) {
            return run_claim_register(ledger_or(c_ledger), c_statement,
                                      {c_model, c_endpoint}, window_from_flags(c_from, c_to),
                                      min_samples_or);
        }
        if (c_check->parsed()) {
            return run_claim_check(ledger_or(c_ledger), c_claim_id,
                                   window_from_flags(c_from, c_to));
        }
        if (c_equiv->parsed()) {
            double threshold =
                c_threshold >= 0.0 ? c_threshold : config.equivalence_threshold;
            return run_claim_equivalence(ledger_or(c_ledger), c_model_a, c_model_b,
                                         window_from_flags(c_from, c_to), threshold,
                                         min_samples_or);
        }
        if (c_export->parsed()) {
            return run_claim_export(ledger_or(c_ledger), c_claim_id, c_out);
        }
        if (a_verify->parsed()) {
            return run_attest_verify(a_report, a_response, a_root, a_ledger);
        }
        if (a_demo->parsed()) {
            return run_attest_demo(a_dir);
        }
        if (l_verify->parsed()) {
            return run_ledger_verify(ledger_or(l_ledger));
        }
        if (d_assess->parsed()) {
            double threshold = d_threshold >= 0.0 ? d_threshold : config.drift_threshold;
            std::size_t ms = d_min_samples > 0 ? d_min_samples : config.min_samples;
            return run_drift_assess(ledger_or(d_ledger), d_model, d_split,
                                    window_from_flags(d_bfrom, d_bto),
                                    window_from_flags(d_cfrom, d_cto), threshold, ms);
        }
        if (sim_cmd->parsed()) {
            return run_sim(s_regime, s_host, s_port, s_emissions, s_fail);
        }
        if (calibrate->parsed()) {
            return run_calibrate(cal_pool, cal_window, cal_pairs, cal_seed);
        }
        if (fixture->parsed()) {
            return run_fixture(f_ledger, f_seed);
        }
        std::cerr << "no subcommand\n";
        return kUsage;
    } catch (const CampaignConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const LedgerIntegrityError& e) {
        std::cerr << "ledger integrity: " << e.what() << "\n";
        return kNegative;
    } catch (const LedgerError& e) {
        std::cerr << "ledger: " << e.what() << "\n";
        return kParse;
    } catch (const json::exception& e) {
        std::cerr << "malformed input: " << e.what() << "\n";
        return kParse;
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        std::cerr << "error: " << what << "\n";
        if (what.rfind("cannot open", 0) == 0 || what.rfind("cannot write", 0) == 0) {
            return kParse;
        }
        return kInternal;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kInternal;
    }
}
