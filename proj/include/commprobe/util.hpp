#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace commprobe {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented contract (bad arguments, malformed files).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Remote service failure after the retry budget is exhausted.
class BackendError : public Error {
public:
    using Error::Error;
};

namespace util {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);
std::vector<std::uint8_t> hmac_sha256(std::string_view key, std::string_view message);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// 64-bit FNV-1a. Stable across platforms; used wherever a mock needs a text hash.
std::uint64_t fnv1a64(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Reads a file that may be gzip-compressed (detected by magic bytes).
std::string read_maybe_gzip(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split_lines(std::string_view text);
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
/// Collapses runs of ASCII whitespace into one space and trims both ends.
std::string collapse_whitespace(std::string_view s);
std::string slugify(std::string_view s);

/// Seeded generator with portable helpers. std distributions are
/// implementation-defined, so sampling goes through these instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform integer in [0, bound) by rejection sampling.
    std::size_t uniform_index(std::size_t bound);
    /// Uniform real in [0, 1).
    double uniform01();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

/// Formats a double with a fixed number of decimals ("83.3").
std::string format_fixed(double value, int decimals);

}  // namespace util

namespace log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level);
Level level();
void write(Level level, std::string_view message);
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

}  // namespace log
}  // namespace commprobe
