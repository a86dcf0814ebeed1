#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "refstab/model.hpp"

namespace refstab {

/// Read side of a record store; lets analyses run against any backing source.
struct RecordSource {
    virtual ~RecordSource() = default;
    virtual std::vector<ObservationRecord> query(const Identifier& identifier,
                                                 const ContextWindow& window) const = 0;
};

/// In-memory source, mostly for tests and one-shot analyses.
class VectorRecordSource : public RecordSource {
public:
    VectorRecordSource() = default;
    explicit VectorRecordSource(std::vector<ObservationRecord> records)
        : records_(std::move(records)) {}

    void add(ObservationRecord r) { records_.push_back(std::move(r)); }

    std::vector<ObservationRecord> query(const Identifier& identifier,
                                         const ContextWindow& window) const override {
        window.validate();
        std::vector<ObservationRecord> out;
        for (const auto& r : records_) {
            if (r.identifier.name != identifier.name) continue;
            if (!window.contains(r.context)) continue;
            out.push_back(r);
        }
        return out;
    }

private:
    std::vector<ObservationRecord> records_;
};

class LedgerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Chain verification failure; index is the first entry that fails to verify.
class LedgerIntegrityError : public LedgerError {
public:
    LedgerIntegrityError(std::size_t index, const std::string& what)
        : LedgerError("ledger entry " + std::to_string(index) + ": " + what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// One line of the ledger file.
struct LedgerEntry {
    std::string kind;       // "observation", "claim" or "verdict"
    json record;            // payload, carries its own record_digest
    Digest256 prev_digest;  // entry_digest of the previous entry, zero for the first
    Digest256 entry_digest; // sha256(record_digest || prev_digest)
};

inline constexpr const char* kLedgerKindObservation = "observation";
inline constexpr const char* kLedgerKindClaim = "claim";
inline constexpr const char* kLedgerKindVerdict = "verdict";

/// Append-only, hash-chained record store over a single JSONL file.
///
/// File layout, byte-exact:
///   line 0: header {"format":"refstab-ledger","hash":"sha-256","version":1}
///   line n: entry  {"entry_digest":"<hex>","kind":"<kind>","prev_digest":"<hex>",
///                   "record":{...,"record_digest":"<hex>"}}
/// All objects are serialized canonically (keys sorted, no whitespace).
/// record_digest = SHA-256 of the record object minus its record_digest key;
/// entry_digest  = SHA-256 of record_digest bytes || prev_digest bytes.
///
/// Single writer (enforced with an advisory file lock), any number of
/// concurrent readers; a reader sees the complete prefix present at open time.
class Ledger : public RecordSource {
public:
    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    Ledger(Ledger&& other) noexcept { *this = std::move(other); }
    Ledger& operator=(Ledger&& other) noexcept {
        if (this != &other) {
            close();
            path_ = std::move(other.path_);
            fd_ = other.fd_;
            other.fd_ = -1;
            tail_digest_ = other.tail_digest_;
            entry_count_ = other.entry_count_;
            corrupt_index_ = other.corrupt_index_;
        }
        return *this;
    }

    ~Ledger() { close(); }

    /// Opens for appending, creating the file (and header) when absent.
    static Ledger open_rw(const std::filesystem::path& path) { return Ledger(path, true); }

    /// Read-only view; no lock is taken.
    static Ledger open_ro(const std::filesystem::path& path) { return Ledger(path, false); }

    const std::filesystem::path& path() const { return path_; }

    /// Entry count as known to this handle. Writers keep it current; read-only
    /// handles count during their scans instead of paying one at open.
    std::size_t size() const { return entry_count_; }

    LedgerEntry append_observation(const ObservationRecord& record) {
        return append_impl(kLedgerKindObservation, record.to_json(), &record.record_digest);
    }

    /// Appends a record of the given kind. The payload's record_digest member
    /// is (re)computed here; all other members are persisted as given.
    LedgerEntry append(const std::string& kind, json record) {
        return append_impl(kind, std::move(record), nullptr);
    }

private:
    LedgerEntry append_impl(const std::string& kind, json record,
                            const Digest256* expected_digest) {
        if (fd_ < 0) throw LedgerError("ledger not open for writing");
        if (corrupt_index_) {
            throw LedgerIntegrityError(*corrupt_index_,
                                       "refusing to append to a corrupted ledger");
        }
        record.erase("record_digest");
        Digest256 rd = digest_of(record);
        if (expected_digest && *expected_digest != rd) {
            throw LedgerError("observation record digest does not match its fields");
        }
        record["record_digest"] = to_hex(rd);

        LedgerEntry entry;
        entry.kind = kind;
        entry.record = std::move(record);
        entry.prev_digest = tail_digest_;
        entry.entry_digest = sha256_pair(rd, entry.prev_digest);

        // the line is assembled by hand in canonical key order
        // (entry_digest < kind < prev_digest < record, byte-wise)
        std::string bytes = "{\"entry_digest\":\"" + to_hex(entry.entry_digest) +
                            "\",\"kind\":\"" + entry.kind + "\",\"prev_digest\":\"" +
                            to_hex(entry.prev_digest) +
                            "\",\"record\":" + canonical_dump(entry.record) + "}";
        bytes.push_back('\n');

        off_t old_size = ::lseek(fd_, 0, SEEK_END);
        ssize_t n = ::write(fd_, bytes.data(), bytes.size());
        if (n != static_cast<ssize_t>(bytes.size())) {
            int err = errno;
            // roll back a partial line so the ledger is unchanged
            bool rolled_back = old_size >= 0 && ::ftruncate(fd_, old_size) == 0;
            throw LedgerError(std::string("ledger append failed: ") +
                              (n < 0 ? std::strerror(err) : "short write") +
                              (rolled_back ? "" : " (rollback also failed)"));
        }
        tail_digest_ = entry.entry_digest;
        ++entry_count_;
        return entry;
    }

public:
    /// Verifying scan over all entries in order. Stops with an integrity error
    /// naming the first entry whose digests or chain link do not hold.
    void for_each(const std::function<void(std::size_t, const LedgerEntry&)>& fn) const {
        std::ifstream in(path_);
        if (!in) throw LedgerError("cannot open ledger file " + path_.string());
        std::string line;
        if (!std::getline(in, line)) return;  // entirely empty file: no entries
        check_header(line);
        Digest256 prev = zero_digest();
        std::size_t index = 0;
        while (std::getline(in, line)) {
            // a line without its trailing newline is a torn write: not yet visible
            if (in.eof()) break;
            LedgerEntry entry = parse_entry(line, index, prev);
            fn(index, entry);
            prev = entry.entry_digest;
            ++index;
        }
    }

    /// Full-chain scan; empty result means the chain holds, otherwise the
    /// index of the first corrupt entry. Corruption is a value, not an error.
    std::optional<std::size_t> verify_chain() const {
        try {
            for_each([](std::size_t, const LedgerEntry&) {});
        } catch (const LedgerIntegrityError& e) {
            return e.index();
        }
        return std::nullopt;
    }

    std::vector<ObservationRecord> query(const Identifier& identifier,
                                         const ContextWindow& window) const override {
        window.validate();
        std::vector<ObservationRecord> out;
        for_each([&](std::size_t, const LedgerEntry& entry) {
            if (entry.kind != kLedgerKindObservation) return;
            ObservationRecord r = ObservationRecord::from_json(entry.record);
            if (r.identifier.name != identifier.name) return;
            if (!window.contains(r.context)) return;
            out.push_back(std::move(r));
        });
        return out;
    }

    /// All entries of one kind, un-deserialized.
    std::vector<json> records_of_kind(const std::string& kind) const {
        std::vector<json> out;
        for_each([&](std::size_t, const LedgerEntry& entry) {
            if (entry.kind == kind) out.push_back(entry.record);
        });
        return out;
    }

    /// Verifying scan over observation records only, copy-free.
    void for_each_observation(const std::function<void(const ObservationRecord&)>& fn) const {
        for_each([&](std::size_t, const LedgerEntry& entry) {
            if (entry.kind != kLedgerKindObservation) return;
            fn(ObservationRecord::from_json(entry.record));
        });
    }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);  // releases the advisory lock
            fd_ = -1;
        }
    }

private:
    Ledger(const std::filesystem::path& path, bool writable) : path_(path) {
        bool existed = std::filesystem::exists(path);
        if (!existed && !writable) {
            throw LedgerError("ledger file does not exist: " + path.string());
        }
        if (writable) {
            fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
            if (fd_ < 0) {
                throw LedgerError("cannot open ledger for writing: " +
                                  std::string(std::strerror(errno)));
            }
            if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
                ::close(fd_);
                fd_ = -1;
                throw LedgerError("ledger is locked by another writer: " + path.string());
            }
            if (!existed || std::filesystem::file_size(path) == 0) {
                write_header();
            }
            scan_tail();  // appends must extend a known-good chain
        } else {
            // readers validate the header eagerly and the chain lazily
            std::ifstream in(path_);
            if (!in) throw LedgerError("cannot open ledger file " + path.string());
            std::string line;
            if (std::getline(in, line) && !line.empty()) check_header(line);
        }
    }

    static json header_json() {
        json h;
        h["format"] = "refstab-ledger";
        h["hash"] = "sha-256";
        h["version"] = 1;
        return h;
    }

    void write_header() {
        std::string bytes = canonical_dump(header_json());
        bytes.push_back('\n');
        if (::write(fd_, bytes.data(), bytes.size()) != static_cast<ssize_t>(bytes.size())) {
            throw LedgerError("cannot write ledger header");
        }
    }

    static void check_header(const std::string& line) {
        json h = json::parse(line, nullptr, false);
        if (h.is_discarded() || !h.is_object() || h.value("format", "") != "refstab-ledger") {
            throw LedgerError("not a refstab ledger (bad header line)");
        }
        if (h.value("hash", "") != "sha-256" || h.value("version", 0) != 1) {
            throw LedgerError("unsupported ledger hash or version");
        }
    }

    static LedgerEntry parse_entry(const std::string& line, std::size_t index,
                                   const Digest256& expected_prev) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw LedgerIntegrityError(index, "entry is not valid JSON");
        }
        LedgerEntry entry;
        try {
            entry.kind = j.at("kind").get<std::string>();
            entry.record = j.at("record");
            entry.prev_digest = digest_from_hex(j.at("prev_digest").get<std::string>());
            entry.entry_digest = digest_from_hex(j.at("entry_digest").get<std::string>());
        } catch (const std::exception& e) {
            throw LedgerIntegrityError(index, std::string("malformed entry: ") + e.what());
        }
        std::string stored_rd;
        try {
            stored_rd = entry.record.at("record_digest").get<std::string>();
        } catch (const std::exception&) {
            throw LedgerIntegrityError(index, "record has no record_digest");
        }
        if (!is_hex_digest(stored_rd)) {
            throw LedgerIntegrityError(index, "record_digest is not a hex digest");
        }
        Digest256 rd = digest_from_hex(stored_rd);
        entry.record.erase("record_digest");  // digest is over the record without it
        Digest256 recomputed = digest_of(entry.record);
        entry.record["record_digest"] = stored_rd;
        if (recomputed != rd) {
            throw LedgerIntegrityError(index, "record bytes do not match record_digest");
        }
        if (entry.prev_digest != expected_prev) {
            throw LedgerIntegrityError(index, "chain link does not match previous entry");
        }
        if (sha256_pair(rd, entry.prev_digest) != entry.entry_digest) {
            throw LedgerIntegrityError(index, "entry_digest does not match");
        }
        return entry;
    }

    /// Verifies the existing chain once at open and remembers the tail, so
    /// appends extend a known-good chain. A corrupt ledger stays readable but
    /// refuses appends.
    void scan_tail() {
        tail_digest_ = zero_digest();
        entry_count_ = 0;
        corrupt_index_.reset();
        try {
            for_each([&](std::size_t, const LedgerEntry& entry) {
                tail_digest_ = entry.entry_digest;
                ++entry_count_;
            });
        } catch (const LedgerIntegrityError& e) {
            corrupt_index_ = e.index();
        }
    }

    std::filesystem::path path_;
    int fd_ = -1;
    Digest256 tail_digest_{};
    std::size_t entry_count_ = 0;
    std::optional<std::size_t> corrupt_index_;
};

}  // namespace refstab
