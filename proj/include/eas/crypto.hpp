#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eas::crypto {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest sha256(std::span<const std::uint8_t> data);

/// Bytes from the operating-system CSPRNG.
std::vector<std::uint8_t> random_bytes(std::size_t n);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

/// Deterministic byte stream expanded from a seed. Used where a caller hands
/// in seed material (credential issuance) so that results are reproducible
/// under a fixed seed and unpredictable under a CSPRNG-drawn one.
class SeededStream {
public:
    explicit SeededStream(std::span<const std::uint8_t> seed);

    std::uint8_t next_byte();
    /// Uniform in [0, bound) by rejection sampling.
    std::uint32_t uniform(std::uint32_t bound);

private:
    void refill();

    std::array<std::uint8_t, 32> key_{};
    std::uint64_t block_ = 0;
    std::array<std::uint8_t, 256> buffer_{};
    std::size_t pos_ = 256;
};

/// Argon2id cost parameters; recorded with every hash so they can change
/// without invalidating stored records.
struct KdfParams {
    std::uint64_t opslimit = 2;
    std::uint64_t memlimit = 19u * 1024u * 1024u;

    static KdfParams interactive();
    /// The cheapest parameters libsodium accepts. Tests only.
    static KdfParams minimal();

    bool operator==(const KdfParams&) const = default;
};

struct PasswordHash {
    std::string algorithm = "argon2id13";
    KdfParams params;
    std::vector<std::uint8_t> salt;  // 16 bytes
    std::vector<std::uint8_t> hash;  // 32 bytes

    bool operator==(const PasswordHash&) const = default;
};

PasswordHash hash_password(std::string_view password, const KdfParams& params);

/// Recomputes the hash with the record's salt and parameters and compares in
/// constant time.
bool verify_password(std::string_view password, const PasswordHash& record);

bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace eas::crypto
