#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace haptest {

/// splitmix64 finalizer; decorrelates nearby integer seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with up to three stream identifiers so parallel trials
/// get reproducible, decorrelated RNG streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

/// FNV-1a 64-bit hash, used for content digests of datasets and reports.
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed);

/// Deterministic Gaussian noise source; one instance per trial.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

    /// Zero-mean Gaussian draw. A non-positive stddev returns 0 without
    /// consuming randomness, so disabled channels do not shift the stream.
    double gaussian(double stddev) {
        if (stddev <= 0.0) return 0.0;
        return stddev * normal_(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace haptest
