#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace c2f {

// Contract violations and I/O failures are exceptions; expected parse
// failures are values (see grammar.hpp FormatError).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VocabError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LengthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; used to derive independent RNG streams from one
// root seed so rollout order never perturbs sibling streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(root ^ 0x517cc1b727220a95ull);
    s = mix64(s ^ a);
    s = mix64(s ^ b);
    s = mix64(s ^ c);
    return s;
}

// Round-trip-exact decimal form ("%.17g"); used for all text outputs that
// must reproduce byte-identically.
std::string format_double(double v);

// Fixed decimal form, e.g. format_fixed(-0.4, 2) == "-0.40".
std::string format_fixed(double v, int places);

// FNV-1a over bytes.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace c2f
