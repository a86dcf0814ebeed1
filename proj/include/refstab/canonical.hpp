#pragma once

#include <json.hpp>

#include <string>

#include "refstab/digest.hpp"

namespace refstab {

using json = nlohmann::json;

/// Canonical serialization rule shared by every persisted object: UTF-8 JSON,
/// object keys sorted byte-wise ascending, no insignificant whitespace.
/// nlohmann::json stores object members in sorted order and dump() emits them
/// compactly, so the canonical bytes are simply dump() output.
inline std::string canonical_dump(const json& j) {
    return j.dump();
}

inline Digest256 digest_of(const json& j) {
    return sha256(canonical_dump(j));
}

/// Digest of a record object with its own "record_digest" member excluded.
/// Every ledger record kind uses this one rule, so independent tooling can
/// re-verify any record without kind-specific logic.
inline Digest256 record_digest_of(json record) {
    record.erase("record_digest");
    return digest_of(record);
}

}  // namespace refstab
