#include "eas/crypto.hpp"

#include "eas/error.hpp"

#include <sodium.h>

#include <mutex>

namespace eas::crypto {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw Error(ErrorCode::IoError, "libsodium initialisation failed");
    });
}

}  // namespace

Sha256Digest sha256(std::span<const std::uint8_t> data) {
    ensure_sodium();
    Sha256Digest out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

std::vector<std::uint8_t> random_bytes(std::size_t n) {
    ensure_sodium();
    std::vector<std::uint8_t> out(n);
    randombytes_buf(out.data(), out.size());
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw Error(ErrorCode::SchemaViolation, "invalid hex string");
    };
    if (hex.size() % 2) throw Error(ErrorCode::SchemaViolation, "odd-length hex string");
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
    return out;
}

SeededStream::SeededStream(std::span<const std::uint8_t> seed) : key_(sha256(seed)) {}

void SeededStream::refill() {
    // randombytes_buf_deterministic takes a 32-byte seed; derive one per block
    // so the stream is unbounded.
    std::array<std::uint8_t, 40> material{};
    std::copy(key_.begin(), key_.end(), material.begin());
    for (int i = 0; i < 8; ++i) material[32 + i] = static_cast<std::uint8_t>(block_ >> (8 * i));
    const auto block_seed = sha256(material);
    randombytes_buf_deterministic(buffer_.data(), buffer_.size(), block_seed.data());
    ++block_;
    pos_ = 0;
}

std::uint8_t SeededStream::next_byte() {
    if (pos_ == buffer_.size()) refill();
    return buffer_[pos_++];
}

std::uint32_t SeededStream::uniform(std::uint32_t bound) {
    if (bound <= 1) return 0;
    // 32-bit draws, rejecting the tail that would bias the modulo.
    const std::uint64_t range = std::uint64_t{1} << 32;
    const std::uint64_t limit = range - range % bound;
    for (;;) {
        std::uint64_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | next_byte();
        if (v < limit) return static_cast<std::uint32_t>(v % bound);
    }
}

KdfParams KdfParams::interactive() {
    return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

KdfParams KdfParams::minimal() {
    return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
}

namespace {

std::vector<std::uint8_t> derive(std::string_view password, std::span<const std::uint8_t> salt,
                                 const KdfParams& params) {
    ensure_sodium();
    if (salt.size() != crypto_pwhash_SALTBYTES)
        throw Error(ErrorCode::SchemaViolation, "password salt must be 16 bytes");
    std::vector<std::uint8_t> out(32);
    if (crypto_pwhash(out.data(), out.size(), password.data(), password.size(), salt.data(),
                      params.opslimit, static_cast<std::size_t>(params.memlimit),
                      crypto_pwhash_ALG_ARGON2ID13) != 0)
        throw Error(ErrorCode::IoError, "password hashing failed (out of memory?)");
    return out;
}

}  // namespace

PasswordHash hash_password(std::string_view password, const KdfParams& params) {
    PasswordHash rec;
    rec.params = params;
    rec.salt = random_bytes(crypto_pwhash_SALTBYTES);
    rec.hash = derive(password, rec.salt, params);
    return rec;
}

bool verify_password(std::string_view password, const PasswordHash& record) {
    if (record.algorithm != "argon2id13") return false;
    const auto candidate = derive(password, record.salt, record.params);
    return constant_time_equal(candidate, record.hash);
}

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    ensure_sodium();
    if (a.size() != b.size()) return false;
    return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace eas::crypto
