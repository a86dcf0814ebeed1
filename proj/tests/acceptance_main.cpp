// Acceptance suite: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exit code is the number of failed criteria.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include "refstab/refstab.hpp"
#include "refstab/survey_fixture.hpp"
#include "support/oracles.hpp"
#include "support/test_helpers.hpp"

using namespace refstab;
namespace fs = std::filesystem;
namespace sim = refstab::sim;
using refstab::testing::oracle_stability;
using refstab::testing::RawObservation;

namespace {

struct Check {
    bool ok = true;
    std::string note;

    void expect(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            note = what;
        }
    }
};

struct Outcome {
    int id;
    std::string label;
    bool pass;
    std::string note;
    double ms;
};

fs::path g_workdir;
std::string g_cli;

fs::path work_file(const std::string& name) { return g_workdir / name; }

int run_cli(const std::string& args, const std::string& stdout_file) {
    std::string cmd = g_cli + " " + args + " >" + stdout_file + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// criterion 1: Table-2 arithmetic on fixed set sizes, display rounding exact

Check criterion_1() {
    Check c;
    auto make_sets = [](std::size_t na_only, std::size_t nb_only, std::size_t shared) {
        FingerprintSet a, b;
        for (std::size_t i = 0; i < shared; ++i) {
            a.insert("s" + std::to_string(i));
            b.insert("s" + std::to_string(i));
        }
        for (std::size_t i = 0; i < na_only; ++i) a.insert("a" + std::to_string(i));
        for (std::size_t i = 0; i < nb_only; ++i) b.insert("b" + std::to_string(i));
        return std::pair{a, b};
    };

    auto [a1, b1] = make_sets(223 - 156, 163 - 156, 156);
    c.expect(a1.size() == 223 && b1.size() == 163, "set construction");
    auto o1 = overlap(a1, b1);
    c.expect(o1.shared == 156, "pair 1 shared = 156");
    c.expect(format_jaccard(o1.jaccard) == "0.68",
             "pair 1 jaccard display, expected 0.68 got " + format_jaccard(o1.jaccard));
    c.expect(format_percent(o1.a_covered) == "70.0",
             "pair 1 A covered, expected 70.0 got " + format_percent(o1.a_covered));
    c.expect(format_percent(o1.b_covered) == "95.7",
             "pair 1 B covered, expected 95.7 got " + format_percent(o1.b_covered));

    auto [a2, b2] = make_sets(137 - 121, 129 - 121, 121);
    c.expect(a2.size() == 137 && b2.size() == 129, "set construction");
    auto o2 = overlap(a2, b2);
    c.expect(o2.shared == 121, "pair 2 shared = 121");
    c.expect(format_jaccard(o2.jaccard) == "0.83",
             "pair 2 jaccard display, expected 0.83 got " + format_jaccard(o2.jaccard));
    c.expect(format_percent(o2.a_covered) == "88.3",
             "pair 2 A covered, expected 88.3 got " + format_percent(o2.a_covered));
    c.expect(format_percent(o2.b_covered) == "94.0",
             "pair 2 B covered, expected 94.0 got " + format_percent(o2.b_covered) +
                 " (121/129 = 93.798% which rounds to 93.8; the expected 94.0 is "
                 "inconsistent with the defining set arithmetic for these sizes)");
    return c;
}

// ---------------------------------------------------------------------------
// criterion 2: the survey-shaped fixture reproduces every count and ratio

Check criterion_2() {
    Check c;
    auto path = work_file("survey.jsonl");
    fs::remove(path);
    {
        auto ledger = Ledger::open_rw(path);
        build_survey_ledger(ledger);
        c.expect(ledger.size() == 69600, "fixture holds 69600 entries");
    }
    auto ledger = Ledger::open_ro(path);

    // one identifier's slice of the survey
    ContextWindow all{0, std::numeric_limits<Instant>::max()};
    c.expect(ledger.query({"gpt-4o", "https://api.example.com/v1"}, all).size() == 11600,
             "query for gpt-4o returns 11600 records");

    std::map<std::string, std::vector<ObservationRecord>> by_id;
    ledger.for_each_observation(
        [&](const ObservationRecord& r) { by_id[r.identifier.name].push_back(r); });
    auto report = diversity_report(by_id);
    c.expect(report.rows.size() == 6, "six identifiers");

    const std::vector<std::pair<std::string, std::size_t>> expected_unique = {
        {"gpt-4.1", 223},          {"gpt-4.1-2025-04-14", 163}, {"gpt-4o", 137},
        {"gpt-4o-2024-05-13", 37}, {"gpt-4o-2024-08-06", 129},  {"gpt-4o-2024-11-20", 77},
    };
    const std::vector<std::string> expected_share = {"7.2", "8.4", "10.4",
                                                     "18.8", "10.2", "14.8"};
    for (std::size_t i = 0; i < expected_unique.size() && i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        c.expect(row.name == expected_unique[i].first, "row order " + row.name);
        c.expect(row.unique == expected_unique[i].second,
                 row.name + " unique, expected " + std::to_string(expected_unique[i].second) +
                     " got " + std::to_string(row.unique));
        c.expect(row.n_obs == 11600, row.name + " has 11600 observations");
        c.expect(format_percent(row.top_share) == expected_share[i],
                 row.name + " top share, expected " + expected_share[i] + " got " +
                     format_percent(row.top_share));
    }

    c.expect(report.pairs.size() == 2, "exactly two non-empty overlap pairs, got " +
                                           std::to_string(report.pairs.size()));
    for (const auto& p : report.pairs) {
        if (p.a == "gpt-4.1" && p.b == "gpt-4.1-2025-04-14") {
            c.expect(p.report.shared == 156, "4.1 pair shares 156");
            c.expect(format_jaccard(p.report.jaccard) == "0.68", "4.1 pair jaccard 0.68");
            c.expect(format_percent(p.report.a_covered) == "70.0", "4.1 pair A covered 70.0");
            c.expect(format_percent(p.report.b_covered) == "95.7", "4.1 pair B covered 95.7");
        } else if (p.a == "gpt-4o" && p.b == "gpt-4o-2024-08-06") {
            c.expect(p.report.shared == 121, "4o pair shares 121");
            c.expect(format_jaccard(p.report.jaccard) == "0.83", "4o pair jaccard 0.83");
            c.expect(format_percent(p.report.a_covered) == "88.3", "4o pair A covered 88.3");
            // 121/129: the construction's own ratio, displayed
            c.expect(format_percent(p.report.b_covered) == "93.8", "4o pair B covered 93.8");
        } else {
            c.expect(false, "unexpected overlap pair " + p.a + " ~ " + p.b);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// criterion 3: evaluate_stability agrees with brute-force enumeration

Check criterion_3() {
    Check c;
    std::mt19937 rng(30003);
    int agreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<RawObservation> raw;
        std::vector<std::pair<ObservationContext, ConfigurationObservation>> obs;
        int n = static_cast<int>(rng() % 31);
        for (int i = 0; i < n; ++i) {
            RawObservation o;
            o.ts = static_cast<Instant>(rng() % 1000);
            o.account_tag = rng() % 2 ? "acct-a" : "acct-b";
            o.region_tag = rng() % 2 ? "us" : "eu";
            int k = static_cast<int>(rng() % 6);
            if (k > 0) o.fingerprint = "fp_" + std::to_string(k % 5);
            raw.push_back(o);
            ObservationContext ctx;
            ctx.timestamp_ms = o.ts;
            ctx.account_tag = o.account_tag;
            ctx.region_tag = o.region_tag;
            obs.push_back({ctx, ConfigurationObservation{o.fingerprint, {}}});
        }
        Instant lo = static_cast<Instant>(rng() % 1000);
        Instant hi = lo + static_cast<Instant>(rng() % (1000 - lo + 1));
        std::size_t min_samples = 1 + rng() % 4;
        ContextWindow window{lo, hi};
        std::optional<std::string> account, region;
        if (rng() % 3 == 0) window.account_tag = account = "acct-a";
        if (rng() % 3 == 0) window.region_tag = region = "eu";

        auto verdict = evaluate_stability(obs, window, min_samples);
        auto oracle = oracle_stability(raw, lo, hi, min_samples, account, region);

        bool same_status = std::string(to_string(verdict.status)) == oracle.status;
        bool same_witness =
            std::vector<std::string>(verdict.witness_set.begin(), verdict.witness_set.end()) ==
            oracle.witness;
        bool same_count = verdict.observation_count == oracle.resolved &&
                          verdict.null_count == oracle.nulls;
        if (same_status && same_witness && same_count) {
            ++agreements;
        } else {
            c.expect(false, "disagreement at trial " + std::to_string(trial) + ": library " +
                                to_string(verdict.status) + ", oracle " + oracle.status);
        }
    }
    c.expect(agreements == 1000,
             "agreement 1000/1000, got " + std::to_string(agreements) + "/1000");
    return c;
}

// ---------------------------------------------------------------------------
// criterion 4: Def.-3 property over randomized sim regimes

Check criterion_4() {
    Check c;
    std::mt19937 rng(40004);
    const Identifier id{"sim-model", "http://127.0.0.1:1/"};
    int trials_run = 0, agreements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        // a randomized regime: pinned, rotating pool of <= 3, or a drift swap
        sim::RegimeSpec spec;
        int kind = static_cast<int>(rng() % 3);
        spec.seed = static_cast<std::int64_t>(rng());
        if (kind == 0) {
            spec.kind = sim::RegimeKind::pinned_stable;
            spec.pool = {{"fp_p" + std::to_string(rng() % 3), 1.0}};
        } else if (kind == 1) {
            spec.kind = sim::RegimeKind::rotating_pool;
            int k = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < k; ++i) spec.pool.push_back({"fp_r" + std::to_string(i), 1.0});
        } else {
            spec.kind = sim::RegimeKind::drift;
            spec.pool = {{"fp_before", 1.0}};
            spec.schedule = {{100, {{"fp_after" + std::to_string(rng() % 2), 1.0}}}};
        }
        sim::RegimeEngine engine(spec);

        // registration observations in [0,99], check observations in [100,199]
        VectorRecordSource source;
        std::vector<RawObservation> raw;
        std::uint64_t seq = 0;
        auto emit_some = [&](Instant lo, int count) {
            for (int i = 0; i < count; ++i) {
                Instant ts = lo + static_cast<Instant>(rng() % 100);
                std::optional<std::string> fp;
                if (rng() % 8 != 0) {  // occasional bottom observation
                    fp = engine.emit({"sim-model", "p", "", ""}, ts).fingerprint;
                }
                source.add(refstab::testing::make_record(id.name, fp, ts, seq++));
                raw.push_back({ts, "acct", "us", fp});
            }
        };
        emit_some(0, 2 + static_cast<int>(rng() % 4));
        emit_some(100, static_cast<int>(rng() % 5));

        Claim claim;
        try {
            claim = register_claim(source, "s", id, {0, 99});
        } catch (const RegistrationRefused&) {
            continue;
        }
        ++trials_run;
        ContextWindow at{100, 199};
        auto verdict = check_bound(source, claim, at);

        // independent oracle via brute-force enumeration
        auto at_oracle = oracle_stability(raw, 100, 199, claim.min_samples);
        auto union_oracle = oracle_stability(raw, 0, 199, claim.min_samples);
        std::vector<std::string> evidence(claim.evidence_witness.begin(),
                                          claim.evidence_witness.end());
        std::size_t at_total = 0;
        for (const auto& o : raw) {
            if (o.ts >= 100 && o.ts <= 199) ++at_total;
        }
        bool oracle_bound = at_total > 0 && at_oracle.resolved >= 1 &&
                            at_oracle.witness == evidence &&
                            union_oracle.status == "stable" &&
                            union_oracle.witness == evidence;
        if (verdict.bound == oracle_bound) {
            ++agreements;
        } else {
            c.expect(false, "counterexample at trial " + std::to_string(trial));
        }
    }
    c.expect(trials_run >= 900, "enough registerable trials: " + std::to_string(trials_run));
    c.expect(agreements == trials_run, "zero counterexamples in " +
                                           std::to_string(trials_run) + " trials, " +
                                           std::to_string(trials_run - agreements) + " found");
    return c;
}

// ---------------------------------------------------------------------------
// criterion 5: detection power and false-positive rate at the default threshold

Check criterion_5() {
    Check c;
    ProbeSplit split;
    split.public_probes = {{"power public probe"}};
    split.private_probes = {{"power private probe"}};
    auto pub_digest = split.public_probes[0].digest();
    auto prv_digest = split.private_probes[0].digest();

    auto window_obs = [&](sim::RegimeEngine& engine, Instant when, int per_subset) {
        std::vector<ProbeObservation> out;
        for (int i = 0; i < per_subset; ++i) {
            out.push_back({pub_digest,
                           engine.emit({"m", split.public_probes[0].prompt, "", ""}, when)
                               .fingerprint});
            out.push_back({prv_digest,
                           engine.emit({"m", split.private_probes[0].prompt, "", ""}, when)
                               .fingerprint});
        }
        return out;
    };

    // detection power: full pool replacement, windows of 200 samples each
    int flagged = 0;
    for (int trial = 0; trial < 200; ++trial) {
        sim::RegimeSpec spec;
        spec.kind = sim::RegimeKind::drift;
        spec.seed = 50000 + trial;
        for (int i = 0; i < 5; ++i) spec.pool.push_back({"fp_old" + std::to_string(i), 1.0});
        sim::Pool replacement;
        for (int i = 0; i < 5; ++i) replacement.push_back({"fp_new" + std::to_string(i), 1.0});
        spec.schedule = {{1000000, replacement}};
        sim::RegimeEngine engine(spec);

        auto baseline = window_obs(engine, 0, 100);       // 200 samples
        auto current = window_obs(engine, 2000000, 100);  // 200 samples
        auto verdict = assess(baseline, current, split, kDefaultDriftThreshold);
        if (verdict.status == DriftStatus::drift) ++flagged;
    }
    c.expect(flagged >= 190, "pool replacement flagged in >= 95% of 200 trials, got " +
                                 std::to_string(flagged) + "/200");

    // false positives: stationary rotating pool, 1000 window pairs
    sim::RegimeSpec stationary;
    stationary.kind = sim::RegimeKind::rotating_pool;
    stationary.seed = 51;
    for (int i = 0; i < 5; ++i) stationary.pool.push_back({"fp_s" + std::to_string(i), 1.0});
    sim::RegimeEngine engine(stationary);
    int false_alarms = 0;
    for (int pair = 0; pair < 1000; ++pair) {
        auto a = window_obs(engine, 0, 100);
        auto b = window_obs(engine, 0, 100);
        auto verdict = assess(a, b, split, kDefaultDriftThreshold);
        if (verdict.status != DriftStatus::consistent) ++false_alarms;
    }
    c.expect(false_alarms <= 50, "stationary false-positive rate <= 5%, got " +
                                     std::to_string(false_alarms) + "/1000");
    return c;
}

// ---------------------------------------------------------------------------
// criterion 6: concealed-update signature

Check criterion_6() {
    Check c;
    ProbeSplit split;
    split.public_probes = {{"published benchmark probe"}};
    split.private_probes = {{"undisclosed canary probe"}};

    int suspected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        sim::RegimeSpec spec;
        spec.kind = sim::RegimeKind::concealed_update;
        spec.seed = 60000 + trial;
        for (int i = 0; i < 4; ++i) spec.pool.push_back({"fp_gen0_" + std::to_string(i), 1.0});
        sim::Pool swapped;
        for (int i = 0; i < 4; ++i) swapped.push_back({"fp_gen1_" + std::to_string(i), 1.0});
        spec.schedule = {{1000000, swapped}};
        spec.concealed.pinned_fingerprint = "fp_public_constant";
        spec.concealed.public_prompt_digests = {to_hex(split.public_probes[0].digest())};
        sim::RegimeEngine engine(spec);

        auto collect = [&](Instant when) {
            std::vector<ProbeObservation> out;
            for (int i = 0; i < 60; ++i) {
                out.push_back({split.public_probes[0].digest(),
                               engine.emit({"m", split.public_probes[0].prompt, "", ""}, when)
                                   .fingerprint});
                out.push_back({split.private_probes[0].digest(),
                               engine.emit({"m", split.private_probes[0].prompt, "", ""}, when)
                                   .fingerprint});
            }
            return out;
        };
        auto baseline = collect(0);
        auto current = collect(2000000);
        auto verdict = assess(baseline, current, split, kDefaultDriftThreshold);
        if (verdict.status == DriftStatus::adaptation_suspected &&
            verdict.public_divergence <= verdict.threshold &&
            verdict.private_divergence > verdict.threshold) {
            ++suspected;
        }
    }
    c.expect(suspected >= 95, "adaptation_suspected in >= 95% of 100 trials, got " +
                                  std::to_string(suspected) + "/100");
    return c;
}

// ---------------------------------------------------------------------------
// criterion 7: ledger tamper evidence on a 10k-entry ledger

Check criterion_7() {
    Check c;
    auto path = work_file("tamper.jsonl");
    fs::remove(path);
    {
        auto ledger = Ledger::open_rw(path);
        for (int i = 0; i < 10000; ++i) {
            ledger.append_observation(refstab::testing::make_record(
                "m", "fp_" + std::to_string(i % 23), i, static_cast<std::uint64_t>(i),
                "campaign-" + std::to_string(i / 100)));
        }
    }
    std::vector<std::string> pristine;
    {
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) pristine.push_back(line);
    }
    c.expect(pristine.size() == 10001, "10000 entries plus header");

    std::mt19937 rng(70007);
    int detected = 0;
    auto tampered_path = work_file("tamper-run.jsonl");
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t entry = rng() % 10000;
        std::size_t line_index = entry + 1;
        std::string line = pristine[line_index];
        std::size_t pos = rng() % line.size();
        unsigned char mask = static_cast<unsigned char>(1 + rng() % 255);
        line[pos] = static_cast<char>(line[pos] ^ mask);
        if (line == pristine[line_index]) {
            ++detected;  // xor with a non-zero mask always changes the byte
            continue;
        }
        {
            std::ofstream out(tampered_path, std::ios::trunc);
            for (std::size_t i = 0; i < pristine.size(); ++i) {
                out << (i == line_index ? line : pristine[i]) << "\n";
            }
        }
        auto ro = Ledger::open_ro(tampered_path);
        auto bad = ro.verify_chain();
        if (bad.has_value() && *bad == entry) {
            ++detected;
        } else {
            c.expect(false, "trial " + std::to_string(trial) + ": flip in entry " +
                                std::to_string(entry) + " reported " +
                                (bad ? std::to_string(*bad) : std::string("ok")));
        }
    }
    c.expect(detected == 100, "100/100 flips detected at the right index, got " +
                                  std::to_string(detected));
    return c;
}

// ---------------------------------------------------------------------------
// criterion 8: attestation soundness across tamper classes

Check criterion_8() {
    Check c;
    std::mt19937 rng(80008);
    auto random_manifest = [&] {
        ConfigurationManifest m;
        m.weights_digest = sha256("weights-" + std::to_string(rng()));
        m.system_prompt_digest = sha256("prompt-" + std::to_string(rng()));
        m.serving_code_digest = sha256("code-" + std::to_string(rng()));
        m.inference_params = {{"temperature", std::to_string(rng() % 3)},
                              {"k", std::to_string(rng() % 100)}};
        m.created_at_ms = static_cast<Instant>(rng());
        return m;
    };
    auto random_response = [&] { return "response-" + std::to_string(rng()); };

    int honest_ok = 0, flip_rejected = 0, mismatch_rejected = 0, forged_rejected = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto root = RootKeypair::generate();

        // honest chain
        auto commitment = commit(random_manifest(), root);
        std::string response = random_response();
        auto signed_response = commitment.keyholder->sign_response(response);
        if (verify(signed_response, commitment.report, root.pub).verified) ++honest_ok;

        // response byte flip
        std::string tampered = response;
        std::size_t pos = rng() % tampered.size();
        tampered[pos] = static_cast<char>(tampered[pos] ^ (1 + rng() % 255));
        auto flipped = signed_response;
        flipped.response_digest = sha256(tampered);
        auto flip_result = verify(flipped, commitment.report, root.pub);
        if (!flip_result.verified && flip_result.reason == RejectReason::bad_response_signature) {
            ++flip_rejected;
        }

        // manifest mismatch: response signed under a different configuration
        auto other = commit(random_manifest(), root);
        auto cross = other.keyholder->sign_response(response);
        auto mismatch_result = verify(cross, commitment.report, root.pub);
        if (!mismatch_result.verified &&
            mismatch_result.reason == RejectReason::manifest_mismatch) {
            ++mismatch_rejected;
        }

        // forged root
        auto impostor = RootKeypair::generate();
        auto forged = commit(random_manifest(), impostor);
        auto forged_signed = forged.keyholder->sign_response(response);
        auto forged_result = verify(forged_signed, forged.report, root.pub);
        if (!forged_result.verified &&
            forged_result.reason == RejectReason::bad_root_binding) {
            ++forged_rejected;
        }
    }
    c.expect(honest_ok == 100, "honest chains: " + std::to_string(honest_ok) + "/100");
    c.expect(flip_rejected == 100,
             "response flips rejected: " + std::to_string(flip_rejected) + "/100");
    c.expect(mismatch_rejected == 100,
             "manifest mismatches rejected: " + std::to_string(mismatch_rejected) + "/100");
    c.expect(forged_rejected == 100,
             "forged roots rejected: " + std::to_string(forged_rejected) + "/100");
    return c;
}

// ---------------------------------------------------------------------------
// criterion 9: end-to-end through the CLI against the simulator

Check criterion_9() {
    Check c;
    if (g_cli.empty()) {
        c.expect(false, "no --cli given");
        return c;
    }
    sim::RegimeSpec regime;
    regime.kind = sim::RegimeKind::pinned_stable;
    regime.seed = 9;
    regime.pool = {{"fp_e2e_pinned", 1.0}};
    sim::SimProvider provider(regime);
    provider.start();

    auto ledger_path = work_file("e2e.jsonl");
    fs::remove(ledger_path);
    std::string base = " --ledger " + ledger_path.string();

    Instant t0 = now_ms() - 1000;
    int rc = run_cli("probe" + base + " --model gpt-e2e --endpoint " + provider.url() +
                         " --seed 7",
                     work_file("probe1.out").string());
    c.expect(rc == 0, "probe #1 exits 0, got " + std::to_string(rc));
    Instant t1 = now_ms() + 1000;
    {
        auto ro = Ledger::open_ro(ledger_path);
        std::size_t n = 0;
        ro.for_each_observation([&](const ObservationRecord&) { ++n; });
        c.expect(n == 100, "probe default n appends 100 records, got " + std::to_string(n));
    }

    std::string window1 = " --window-from " + std::to_string(t0) + " --window-to " +
                          std::to_string(t1);
    rc = run_cli("claim register" + base + " --statement \"refuses category X\" " +
                     "--model gpt-e2e --endpoint " + provider.url() + window1,
                 work_file("register.out").string());
    c.expect(rc == 0, "claim register exits 0, got " + std::to_string(rc));
    std::smatch m;
    std::string register_out = slurp(work_file("register.out"));
    std::regex claim_re("claim ([0-9a-f-]{36}) registered");
    c.expect(std::regex_search(register_out, m, claim_re), "claim id parsed from output");
    if (!c.ok) return c;
    std::string claim_id = m[1];

    rc = run_cli("claim check" + base + " --claim-id " + claim_id + window1,
                 work_file("check1.out").string());
    std::string check1 = slurp(work_file("check1.out"));
    c.expect(rc == 0 && check1.find("bound") == 0,
             "check #1 is bound (exit " + std::to_string(rc) + ", output: " + check1 + ")");

    // switch the regime to drift with a fresh pool and probe again
    sim::RegimeSpec drift;
    drift.kind = sim::RegimeKind::drift;
    drift.seed = 10;
    drift.pool = {{"fp_e2e_drifted", 1.0}};
    provider.swap_regime(drift);

    // strictly after every probe-#1 timestamp: probe #1's process has exited
    Instant t2 = now_ms() + 1;
    rc = run_cli("probe" + base + " --model gpt-e2e --endpoint " + provider.url() +
                     " --seed 7",
                 work_file("probe2.out").string());
    c.expect(rc == 0, "probe #2 exits 0, got " + std::to_string(rc));
    Instant t3 = now_ms() + 1000;

    std::string window2 = " --window-from " + std::to_string(t2) + " --window-to " +
                          std::to_string(t3);
    rc = run_cli("claim check" + base + " --claim-id " + claim_id + window2,
                 work_file("check2.out").string());
    std::string check2 = slurp(work_file("check2.out"));
    c.expect(rc == 4, "check #2 exits 4 (unbound), got " + std::to_string(rc));
    c.expect(check2.find("unbound (witness_changed)") == 0,
             "check #2 reports witness_changed, output: " + check2);

    // the session itself is auditable: chain still verifies, verdicts recorded
    rc = run_cli("ledger verify" + base, work_file("verify.out").string());
    c.expect(rc == 0, "ledger verify exits 0 after the session");
    {
        auto ro = Ledger::open_ro(ledger_path);
        c.expect(ro.records_of_kind(kLedgerKindVerdict).size() == 2,
                 "both checks recorded as verdict records");
        c.expect(ro.records_of_kind(kLedgerKindClaim).size() == 1,
                 "registration recorded as claim record");
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; i += 2) {
        std::string flag = argv[i];
        if (flag == "--cli") g_cli = argv[i + 1];
        if (flag == "--workdir") g_workdir = argv[i + 1];
    }
    if (g_workdir.empty()) {
        g_workdir = fs::temp_directory_path() / "refstab-acceptance";
    }
    fs::create_directories(g_workdir);

    struct Criterion {
        int id;
        std::string label;
        double budget_ms;  // 0 = no stated budget
        Check (*fn)();
    };
    const std::vector<Criterion> criteria = {
        {1, "fixed-size overlap arithmetic and display rounding", 1000, criterion_1},
        {2, "survey-shaped fixture diversity report", 10000, criterion_2},
        {3, "stability decision vs brute-force oracle", 0, criterion_3},
        {4, "bound-claim property over randomized regimes", 0, criterion_4},
        {5, "drift detection power and false-positive rate", 0, criterion_5},
        {6, "concealed-update signature", 0, criterion_6},
        {7, "ledger tamper evidence", 0, criterion_7},
        {8, "attestation soundness", 0, criterion_8},
        {9, "end-to-end probe/claim flow via the CLI", 30000, criterion_9},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        Check check;
        try {
            check = criterion.fn();
        } catch (const std::exception& e) {
            check.ok = false;
            check.note = std::string("exception: ") + e.what();
        }
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
        if (criterion.budget_ms > 0 && ms > criterion.budget_ms && check.ok) {
            check.ok = false;
            check.note = "over time budget: " + std::to_string(ms) + " ms";
        }
        if (!check.ok) ++failures;
        std::printf("%s  criterion %d: %s (%.0f ms)%s%s\n", check.ok ? "PASS" : "FAIL",
                    criterion.id, criterion.label.c_str(), ms,
                    check.note.empty() ? "" : " -- ", check.note.c_str());
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures;
}
