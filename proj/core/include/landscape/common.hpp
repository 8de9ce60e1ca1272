#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace landscape {

/// Malformed input data, unparsable files, incompatible artifacts.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values or other numeric breakdown during computation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing / seeding

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and a salt.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t value);

// ---------------------------------------------------------------------------
// Deterministic random source.
//
// All randomness in the library flows through this wrapper so that streams
// are fully pinned: uniform doubles come from the top 53 bits, integers use
// rejection sampling, normals use Box-Muller. std::distributions are avoided
// because their output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Unbiased integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal draw (Box-Muller, cached spare).
    double normal();

private:
    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;

    std::uint64_t rotl(std::uint64_t x, int k) const;
};

/// In-place Fisher-Yates shuffle with a pinned index stream.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

// ---------------------------------------------------------------------------
// Base64 (standard alphabet, '=' padding)

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(std::string_view text);

/// Little-endian IEEE-754 doubles <-> base64 payloads for model files.
std::string doubles_to_base64(std::span<const double> values);
std::vector<double> base64_to_doubles(std::string_view text);

// ---------------------------------------------------------------------------
// String / parsing helpers

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);
std::int64_t parse_int64(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);

/// Shortest round-trip decimal rendering of a double ("%.17g").
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Flat key=value configs ('#' starts a comment, one pair per line).

class KeyValueConfig {
public:
    static KeyValueConfig parse_text(std::string_view text);
    static KeyValueConfig parse_file(const std::string& path);

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;  // throws DataError if absent
    std::string get_or(const std::string& key, std::string fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    /// Stable digest of the canonicalized key=value content.
    std::string digest() const;

private:
    std::map<std::string, std::string> entries_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace landscape
