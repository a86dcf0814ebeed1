#pragma once

#include <sodium.h>

#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refstab/canonical.hpp"
#include "refstab/digest.hpp"
#include "refstab/util.hpp"

namespace refstab {

inline constexpr const char* kSignatureScheme = "ed25519";

using PublicKey = std::array<unsigned char, crypto_sign_PUBLICKEYBYTES>;
using SecretKey = std::array<unsigned char, crypto_sign_SECRETKEYBYTES>;
using Signature = std::array<unsigned char, crypto_sign_BYTES>;

template <std::size_t N>
inline std::string bytes_to_hex(const std::array<unsigned char, N>& a) {
    static constexpr char alphabet[] = "0123456789abcdef";
    std::string out(2 * N, '0');
    for (std::size_t i = 0; i < N; ++i) {
        out[2 * i] = alphabet[a[i] >> 4];
        out[2 * i + 1] = alphabet[a[i] & 0x0f];
    }
    return out;
}

template <std::size_t N>
inline std::array<unsigned char, N> bytes_from_hex(const std::string& s) {
    if (s.size() != 2 * N) {
        throw std::invalid_argument("expected " + std::to_string(2 * N) + " hex characters");
    }
    std::array<unsigned char, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        int hi = hex_nibble(s[2 * i]), lo = hex_nibble(s[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex byte in '" + s + "'");
        out[i] = static_cast<unsigned char>(hi << 4 | lo);
    }
    return out;
}

/// Root keypair standing in for the hardware root of trust.
struct RootKeypair {
    PublicKey pub{};
    SecretKey sec{};

    static RootKeypair generate() {
        ensure_crypto_init();
        RootKeypair kp;
        crypto_sign_keypair(kp.pub.data(), kp.sec.data());
        return kp;
    }
};

/// Commits to everything that makes up a served configuration. The digests
/// stand in for artifacts the verifier never sees.
struct ConfigurationManifest {
    Digest256 weights_digest{};
    Digest256 system_prompt_digest{};
    Digest256 serving_code_digest{};
    std::map<std::string, std::string> inference_params;
    Instant created_at_ms = 0;

    json to_json() const {
        json j;
        j["weights_digest"] = to_hex(weights_digest);
        j["system_prompt_digest"] = to_hex(system_prompt_digest);
        j["serving_code_digest"] = to_hex(serving_code_digest);
        j["inference_params"] = json(inference_params);
        j["created_at_ms"] = created_at_ms;
        return j;
    }

    static ConfigurationManifest from_json(const json& j) {
        ConfigurationManifest m;
        m.weights_digest = digest_from_hex(j.at("weights_digest").get<std::string>());
        m.system_prompt_digest = digest_from_hex(j.at("system_prompt_digest").get<std::string>());
        m.serving_code_digest = digest_from_hex(j.at("serving_code_digest").get<std::string>());
        m.inference_params =
            j.at("inference_params").get<std::map<std::string, std::string>>();
        m.created_at_ms = j.at("created_at_ms").get<Instant>();
        return m;
    }

    /// Digest of the canonical serialization; any field change changes it.
    Digest256 digest() const { return digest_of(to_json()); }
};

/// Binds a per-configuration signing key to a manifest digest under the root
/// key. Verifying this plus a signed response needs only digests and keys,
/// never the manifest's source artifacts.
struct AttestationReport {
    Digest256 manifest_digest{};
    PublicKey signing_pubkey{};
    std::string scheme = kSignatureScheme;
    Signature binding_signature{};  // over manifest_digest || signing_pubkey

    json to_json() const {
        json j;
        j["manifest_digest"] = to_hex(manifest_digest);
        j["signing_pubkey"] = bytes_to_hex(signing_pubkey);
        j["scheme"] = scheme;
        j["binding_signature"] = bytes_to_hex(binding_signature);
        return j;
    }

    static AttestationReport from_json(const json& j) {
        AttestationReport r;
        r.manifest_digest = digest_from_hex(j.at("manifest_digest").get<std::string>());
        r.signing_pubkey =
            bytes_from_hex<crypto_sign_PUBLICKEYBYTES>(j.at("signing_pubkey").get<std::string>());
        r.scheme = j.at("scheme").get<std::string>();
        r.binding_signature =
            bytes_from_hex<crypto_sign_BYTES>(j.at("binding_signature").get<std::string>());
        return r;
    }
};

struct SignedResponse {
    Digest256 response_digest{};
    Digest256 manifest_digest{};
    std::string scheme = kSignatureScheme;
    Signature signature{};  // over response_digest || manifest_digest

    json to_json() const {
        json j;
        j["response_digest"] = to_hex(response_digest);
        j["manifest_digest"] = to_hex(manifest_digest);
        j["scheme"] = scheme;
        j["signature"] = bytes_to_hex(signature);
        return j;
    }

    static SignedResponse from_json(const json& j) {
        SignedResponse s;
        s.response_digest = digest_from_hex(j.at("response_digest").get<std::string>());
        s.manifest_digest = digest_from_hex(j.at("manifest_digest").get<std::string>());
        s.scheme = j.at("scheme").get<std::string>();
        s.signature = bytes_from_hex<crypto_sign_BYTES>(j.at("signature").get<std::string>());
        return s;
    }
};

namespace detail {
inline std::vector<unsigned char> concat(std::span<const unsigned char> a,
                                         std::span<const unsigned char> b) {
    std::vector<unsigned char> buf;
    buf.reserve(a.size() + b.size());
    buf.insert(buf.end(), a.begin(), a.end());
    buf.insert(buf.end(), b.begin(), b.end());
    return buf;
}

inline Signature sign_detached(std::span<const unsigned char> msg, const SecretKey& sk) {
    ensure_crypto_init();
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), sk.data());
    return sig;
}

inline bool verify_detached(const Signature& sig, std::span<const unsigned char> msg,
                            const PublicKey& pk) {
    ensure_crypto_init();
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pk.data()) == 0;
}
}  // namespace detail

class KeyholderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The simulated enclave: owns the per-configuration signing key and exposes
/// it only as a signing capability. Single-epoch keys; no rotation.
class Keyholder {
public:
    Keyholder(SecretKey signing_key, Digest256 manifest_digest)
        : signing_key_(signing_key), manifest_digest_(manifest_digest) {}

    ~Keyholder() { wipe(); }

    Keyholder(const Keyholder&) = delete;
    Keyholder& operator=(const Keyholder&) = delete;

    SignedResponse sign_response(std::span<const unsigned char> response_bytes) const {
        if (closed_) throw KeyholderError("keyholder is closed");
        SignedResponse out;
        out.response_digest = sha256(response_bytes);
        out.manifest_digest = manifest_digest_;
        auto msg = detail::concat(
            std::span<const unsigned char>(out.response_digest.data(), out.response_digest.size()),
            std::span<const unsigned char>(out.manifest_digest.data(), out.manifest_digest.size()));
        out.signature = detail::sign_detached(
            std::span<const unsigned char>(msg.data(), msg.size()), signing_key_);
        return out;
    }

    SignedResponse sign_response(std::string_view response_text) const {
        return sign_response(std::span<const unsigned char>(
            reinterpret_cast<const unsigned char*>(response_text.data()), response_text.size()));
    }

    void close() {
        closed_ = true;
        wipe();
    }

    bool closed() const { return closed_; }
    const Digest256& manifest_digest() const { return manifest_digest_; }

private:
    void wipe() { sodium_memzero(signing_key_.data(), signing_key_.size()); }

    SecretKey signing_key_{};
    Digest256 manifest_digest_{};
    bool closed_ = false;
};

struct Commitment {
    ConfigurationManifest manifest;
    AttestationReport report;
    std::unique_ptr<Keyholder> keyholder;
};

/// Generates a fresh signing keypair for the manifest and binds it under the
/// root key. The signing secret never leaves the returned keyholder.
inline Commitment commit(const ConfigurationManifest& manifest, const RootKeypair& root) {
    ensure_crypto_init();
    Commitment out;
    out.manifest = manifest;
    PublicKey spk{};
    SecretKey ssk{};
    crypto_sign_keypair(spk.data(), ssk.data());
    out.report.manifest_digest = manifest.digest();
    out.report.signing_pubkey = spk;
    out.report.scheme = kSignatureScheme;
    auto msg = detail::concat(
        std::span<const unsigned char>(out.report.manifest_digest.data(),
                                       out.report.manifest_digest.size()),
        std::span<const unsigned char>(spk.data(), spk.size()));
    out.report.binding_signature = detail::sign_detached(
        std::span<const unsigned char>(msg.data(), msg.size()), root.sec);
    out.keyholder = std::make_unique<Keyholder>(ssk, out.report.manifest_digest);
    sodium_memzero(ssk.data(), ssk.size());
    return out;
}

enum class RejectReason { none, bad_root_binding, manifest_mismatch, bad_response_signature };

inline const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::none: return "none";
        case RejectReason::bad_root_binding: return "bad_root_binding";
        case RejectReason::manifest_mismatch: return "manifest_mismatch";
        case RejectReason::bad_response_signature: return "bad_response_signature";
    }
    return "?";
}

struct VerifyResult {
    bool verified = false;
    Digest256 manifest_digest{};
    RejectReason reason = RejectReason::none;
};

/// Checks the full chain root -> signing key -> (response, manifest). Needs no
/// access to weights or prompts, only digests and public keys. Rejection is a
/// value, not an error.
inline VerifyResult verify(const SignedResponse& signed_response,
                           const AttestationReport& report, const PublicKey& root_pubkey) {
    VerifyResult out;
    auto binding_msg = detail::concat(
        std::span<const unsigned char>(report.manifest_digest.data(),
                                       report.manifest_digest.size()),
        std::span<const unsigned char>(report.signing_pubkey.data(),
                                       report.signing_pubkey.size()));
    if (report.scheme != kSignatureScheme ||
        !detail::verify_detached(report.binding_signature,
                                 std::span<const unsigned char>(binding_msg.data(),
                                                                binding_msg.size()),
                                 root_pubkey)) {
        out.reason = RejectReason::bad_root_binding;
        return out;
    }
    if (signed_response.manifest_digest != report.manifest_digest) {
        out.reason = RejectReason::manifest_mismatch;
        return out;
    }
    auto response_msg = detail::concat(
        std::span<const unsigned char>(signed_response.response_digest.data(),
                                       signed_response.response_digest.size()),
        std::span<const unsigned char>(signed_response.manifest_digest.data(),
                                       signed_response.manifest_digest.size()));
    if (signed_response.scheme != kSignatureScheme ||
        !detail::verify_detached(signed_response.signature,
                                 std::span<const unsigned char>(response_msg.data(),
                                                                response_msg.size()),
                                 report.signing_pubkey)) {
        out.reason = RejectReason::bad_response_signature;
        return out;
    }
    out.verified = true;
    out.manifest_digest = report.manifest_digest;
    return out;
}

// File helpers for the CLI surface.

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

}  // namespace refstab
