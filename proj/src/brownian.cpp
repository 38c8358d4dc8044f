#include "maxembed/brownian.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace maxembed {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Philox4x32(std::uint64_t key, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)}, stream_(stream) {}

Philox4x32::block Philox4x32::generate(block c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

Philox4x32::result_type Philox4x32::operator()() {
    if (used_ == 4) {
        const block counter{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = generate(counter, key_);
        ++block_;
        used_ = 0;
    }
    return buffer_[used_++];
}

double Philox4x32::uniform() {
    // 53 random bits, shifted off zero.
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

PathStream::PathStream(std::uint64_t seed, std::uint64_t path_index, double dt)
    : engine_(seed, path_index), sd_(std::sqrt(dt)), dt_(dt) {}

double PathStream::increment() {
    // The ziggurat sampler is stateless, so a local object keeps paths independent.
    boost::random::normal_distribution<double> normal(0.0, sd_);
    return normal(engine_);
}

BrownianSampler::BrownianSampler(double dt, std::size_t cap, std::uint64_t seed) : dt_(dt), cap_(cap), seed_(seed) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    if (cap == 0) throw std::invalid_argument("step cap must be positive");
}

BrownianPath BrownianSampler::sample(std::uint64_t path_index, std::size_t steps) const {
    BrownianPath out;
    out.truncated = steps > cap_;
    const std::size_t n = std::min(steps, cap_);
    out.values.resize(n + 1);
    out.values[0] = 0.0;
    PathStream s = stream(path_index);
    for (std::size_t i = 0; i < n; ++i) out.values[i + 1] = out.values[i] + s.increment();
    return out;
}

}  // namespace maxembed
