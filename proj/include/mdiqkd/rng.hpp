#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace mdiqkd {

/// Philox4x32-10 counter-based block function. Counter-mode generation
/// gives random access by (cycle, draw) index, so campaign output does not
/// depend on how cycles are partitioned across workers.
struct Philox4x32 {
    using Block = std::array<std::uint32_t, 4>;

    static Block generate(std::uint64_t key, const Block& counter) {
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        Block c = counter;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = 0xD2511F53ull * c[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * c[2];
            c = Block{static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0,
                      static_cast<std::uint32_t>(p1),
                      static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1,
                      static_cast<std::uint32_t>(p0)};
            k0 += 0x9E3779B9u;  // golden-ratio Weyl increments
            k1 += 0xBB67AE85u;
        }
        return c;
    }
};

/// One logical random stream addressed by (seed, stream, cycle). Each cycle
/// owns an unbounded sequence of draws; set_cycle() jumps to the start of a
/// cycle's sequence.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint32_t stream = 0)
        : seed_(seed), stream_(stream) {}

    void set_cycle(std::uint64_t cycle) {
        cycle_ = cycle;
        block_index_ = 0;
        pos_ = 4;
    }

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// uniform double in [0, 1) with 53 random bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    /// Knuth inversion; intended for small means (attenuated pulses)
    int poisson(double mean) {
        if (mean < 0.0) throw std::domain_error("poisson: mean must be >= 0");
        const double limit = std::exp(-mean);
        int k = 0;
        double prod = next_double();
        while (prod > limit) {
            ++k;
            prod *= next_double();
            if (k > 4096) throw std::domain_error("poisson: mean too large for inversion");
        }
        return k;
    }

private:
    void refill() {
        buf_ = Philox4x32::generate(
            seed_, {static_cast<std::uint32_t>(cycle_), static_cast<std::uint32_t>(cycle_ >> 32),
                    block_index_++, stream_});
        pos_ = 0;
    }

    std::uint64_t seed_ = 0;
    std::uint32_t stream_ = 0;
    std::uint64_t cycle_ = 0;
    std::uint32_t block_index_ = 0;
    Philox4x32::Block buf_{};
    int pos_ = 4;
};

}  // namespace mdiqkd
