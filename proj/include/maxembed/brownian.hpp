#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace maxembed {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// The 128-bit counter is split into a 64-bit block index and a 64-bit stream id,
/// so every (key, stream) pair gives an independent, reproducible sequence.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using block = std::array<std::uint32_t, 4>;

    Philox4x32(std::uint64_t key, std::uint64_t stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// One raw application of the bijection.
    static block generate(block counter, std::array<std::uint32_t, 2> key);

    /// Uniform double in (0, 1).
    double uniform();

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    block buffer_{};
    int used_ = 4;
};

/// Source of Gaussian increments for one path.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path_index, double dt);

    double dt() const { return dt_; }
    /// N(0, dt) increment.
    double increment();
    double uniform() { return engine_.uniform(); }

private:
    Philox4x32 engine_;
    double sd_;
    double dt_;
};

struct BrownianPath {
    std::vector<double> values;
    bool truncated = false;
};

/// Random walk with N(0, dt) steps; path i depends only on (seed, i).
class BrownianSampler {
public:
    BrownianSampler(double dt, std::size_t cap, std::uint64_t seed);

    double dt() const { return dt_; }
    std::size_t cap() const { return cap_; }
    std::uint64_t seed() const { return seed_; }

    PathStream stream(std::uint64_t path_index) const { return PathStream(seed_, path_index, dt_); }
    /// values[0] = 0 followed by `steps` increments; truncated when steps exceeds the cap.
    BrownianPath sample(std::uint64_t path_index, std::size_t steps) const;

private:
    double dt_;
    std::size_t cap_;
    std::uint64_t seed_;
};

}  // namespace maxembed
