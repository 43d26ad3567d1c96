#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>

namespace seine {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or an unsatisfiable option combination.
/// The CLI maps these to exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing, malformed, or truncated input/output files.
/// The CLI maps these to exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over a byte string. `hash` allows chaining.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t hash = kFnvOffset) {
    for (unsigned char c : data) {
        hash ^= c;
        hash *= kFnvPrime;
    }
    return hash;
}

/// splitmix64 step; advances `state` and returns the next 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Runs fn(0..count-1) on up to `workers` threads. Tasks must be independent;
/// each task writes only to its own output slot, so results do not depend on
/// the worker count. Exceptions from tasks are rethrown on the calling thread.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
        return std::hash<std::string_view>{}(s);
    }
};

/// string-keyed map with heterogeneous (string_view) lookup
template <typename V>
using StringMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;

}  // namespace seine
