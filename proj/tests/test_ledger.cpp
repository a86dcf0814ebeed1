#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "refstab/ledger.hpp"
#include "support/test_helpers.hpp"

using namespace refstab;
using refstab::testing::make_record;
namespace fs = std::filesystem;

namespace {

fs::path temp_ledger_path(const std::string& tag) {
    auto dir = fs::temp_directory_path() / "refstab-tests";
    fs::create_directories(dir);
    return dir / (tag + "-" + uuid4() + ".jsonl");
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p, std::ios::trunc);
    for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("genesis entry chains from the zero digest", "[ledger]") {
    auto path = temp_ledger_path("genesis");
    auto ledger = Ledger::open_rw(path);
    auto entry = ledger.append_observation(make_record("m", "fp_a", 10, 0));
    CHECK(entry.prev_digest == zero_digest());
    CHECK(entry.entry_digest ==
          sha256_pair(digest_from_hex(entry.record.at("record_digest").get<std::string>()),
                      zero_digest()));
}

TEST_CASE("second entry links to the first", "[ledger]") {
    auto path = temp_ledger_path("chain");
    auto ledger = Ledger::open_rw(path);
    auto e0 = ledger.append_observation(make_record("m", "fp_a", 10, 0));
    auto e1 = ledger.append_observation(make_record("m", "fp_b", 20, 1));
    CHECK(e1.prev_digest == e0.entry_digest);
    CHECK(!ledger.verify_chain().has_value());
}

TEST_CASE("append then query round-trips the record byte-identically", "[ledger]") {
    auto path = temp_ledger_path("roundtrip");
    auto ledger = Ledger::open_rw(path);
    auto original = make_record("gpt-4o", "fp_abc", 500, 3, "c-1", 200, "acct", "eu");
    ledger.append_observation(original);
    auto got = ledger.query({"gpt-4o", "http://x/"}, ContextWindow{0, 1000});
    REQUIRE(got.size() == 1);
    CHECK(canonical_dump(got[0].to_json()) == canonical_dump(original.to_json()));
}

TEST_CASE("query filters by name, window and tags", "[ledger]") {
    auto path = temp_ledger_path("query");
    auto ledger = Ledger::open_rw(path);
    CHECK(ledger.query({"m", "http://x/"}, ContextWindow{0, 10}).empty());

    ledger.append_observation(make_record("a", "fp_1", 10, 0, "c", 200, "acct1", "us"));
    ledger.append_observation(make_record("a", "fp_2", 20, 1, "c", 200, "acct2", "us"));
    ledger.append_observation(make_record("b", "fp_3", 15, 2, "c", 200, "acct1", "us"));

    CHECK(ledger.query({"a", "http://x/"}, ContextWindow{0, 100}).size() == 2);
    CHECK(ledger.query({"b", "http://x/"}, ContextWindow{0, 100}).size() == 1);
    CHECK(ledger.query({"a", "http://x/"}, ContextWindow{0, 12}).size() == 1);
    CHECK(ledger.query({"a", "http://x/"}, ContextWindow{50, 100}).empty());
    ContextWindow tagged{0, 100, "acct2", std::nullopt};
    auto got = ledger.query({"a", "http://x/"}, tagged);
    REQUIRE(got.size() == 1);
    CHECK(got[0].fingerprint == "fp_2");
}

TEST_CASE("verify_chain accepts empty and untouched ledgers", "[ledger]") {
    auto path = temp_ledger_path("verify");
    auto ledger = Ledger::open_rw(path);
    CHECK(!ledger.verify_chain().has_value());
    for (int i = 0; i < 20; ++i) {
        ledger.append_observation(make_record("m", "fp_" + std::to_string(i % 3), i, i));
    }
    CHECK(!ledger.verify_chain().has_value());
}

TEST_CASE("a flipped byte in any entry is detected at that index", "[ledger]") {
    auto path = temp_ledger_path("tamper");
    {
        auto ledger = Ledger::open_rw(path);
        for (int i = 0; i < 50; ++i) {
            ledger.append_observation(make_record("m", "fp_" + std::to_string(i % 5), i, i));
        }
    }
    auto pristine = read_lines(path);
    REQUIRE(pristine.size() == 51);  // header + 50 entries

    std::mt19937 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        auto lines = pristine;
        std::size_t entry = rng() % 50;
        std::string& line = lines[entry + 1];
        std::size_t pos = rng() % line.size();
        unsigned char mask = static_cast<unsigned char>(1 + rng() % 255);
        line[pos] = static_cast<char>(line[pos] ^ mask);
        if (lines[entry + 1] == pristine[entry + 1]) continue;
        write_lines(path, lines);
        auto ro = Ledger::open_ro(path);
        auto bad = ro.verify_chain();
        REQUIRE(bad.has_value());
        REQUIRE(*bad == entry);
    }
}

TEST_CASE("appends are refused after detected corruption", "[ledger]") {
    auto path = temp_ledger_path("failclosed");
    {
        auto ledger = Ledger::open_rw(path);
        for (int i = 0; i < 5; ++i) ledger.append_observation(make_record("m", "fp", i, i));
    }
    auto lines = read_lines(path);
    lines[2][20] = lines[2][20] == 'x' ? 'y' : 'x';
    write_lines(path, lines);

    auto reopened = Ledger::open_rw(path);
    try {
        reopened.append_observation(make_record("m", "fp", 99, 99));
        FAIL("expected integrity error");
    } catch (const LedgerIntegrityError& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("a second concurrent writer is rejected", "[ledger]") {
    auto path = temp_ledger_path("lock");
    auto first = Ledger::open_rw(path);
    CHECK_THROWS_AS(Ledger::open_rw(path), LedgerError);
    first.close();
    CHECK_NOTHROW(Ledger::open_rw(path));
}

TEST_CASE("a trailing partial line is invisible to readers", "[ledger]") {
    auto path = temp_ledger_path("partial");
    {
        auto ledger = Ledger::open_rw(path);
        ledger.append_observation(make_record("m", "fp_a", 1, 0));
        ledger.append_observation(make_record("m", "fp_b", 2, 1));
    }
    {
        std::ofstream out(path, std::ios::app);
        out << "{\"kind\":\"observation\",\"record\":";  // simulated torn write
    }
    auto ro = Ledger::open_ro(path);
    CHECK(ro.query({"m", "http://x/"}, ContextWindow{0, 10}).size() == 2);
}

TEST_CASE("mixed record kinds keep one chain", "[ledger]") {
    auto path = temp_ledger_path("kinds");
    auto ledger = Ledger::open_rw(path);
    ledger.append_observation(make_record("m", "fp_a", 1, 0));
    json note;
    note["command"] = "claim-check";
    note["bound"] = true;
    ledger.append(kLedgerKindVerdict, note);
    ledger.append_observation(make_record("m", "fp_b", 2, 1));
    CHECK(!ledger.verify_chain().has_value());
    CHECK(ledger.records_of_kind(kLedgerKindVerdict).size() == 1);
    CHECK(ledger.query({"m", "http://x/"}, ContextWindow{0, 10}).size() == 2);
}

TEST_CASE("reopening resumes the chain correctly", "[ledger]") {
    auto path = temp_ledger_path("reopen");
    {
        auto ledger = Ledger::open_rw(path);
        ledger.append_observation(make_record("m", "fp_a", 1, 0));
    }
    {
        auto ledger = Ledger::open_rw(path);
        ledger.append_observation(make_record("m", "fp_b", 2, 1));
        CHECK(ledger.size() == 2);
    }
    auto ro = Ledger::open_ro(path);
    CHECK(!ro.verify_chain().has_value());
}

TEST_CASE("non-ledger files are rejected", "[ledger]") {
    auto path = temp_ledger_path("notledger");
    write_lines(path, {"this is not a ledger"});
    CHECK_THROWS_AS(Ledger::open_ro(path), LedgerError);
}
