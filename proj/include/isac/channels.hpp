#pragma once

// Reproducible channel generation. Randomness comes from a Philox4x32-10
// counter-based generator keyed by the scenario seed, with one independent
// stream per user so draws do not depend on evaluation order or thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "isac/model.hpp"

namespace isac {

/// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Sequential view over one Philox stream: key = seed, counter = (block index, stream id).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        const std::uint64_t out = buffer_[2 - buffered_];
        --buffered_;
        return out;
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
    cd complex_normal() {
        const double re = normal();
        const double im = normal();
        return cd(re, im) * std::sqrt(0.5);
    }

private:
    void refill() {
        const std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                                  static_cast<std::uint32_t>(seed_ >> 32)};
        const auto out = philox4x32_10(ctr, key);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        buffered_ = 2;
        ++block_;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Mixes a base seed with indices (sweep point, realization, ...) into an independent seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> indices) {
    auto mix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (std::uint64_t i : indices) h = mix(h ^ mix(i + 0x632BE59BD9B4E019ull));
    return h;
}

// ---------------------------------------------------------------------------

enum class ChannelKind { Rayleigh, LOS };

struct ChannelScenario {
    ChannelKind kind = ChannelKind::Rayleigh;
    double pathloss_db = 80.0;
    /// LOS user directions; when empty they are drawn uniformly from [-pi/2, pi/2].
    std::optional<std::vector<double>> user_angles;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(pathloss_db >= 0.0)) throw ContractError("ChannelScenario: pathloss must be >= 0 dB");
    }

    double power_gain() const { return std::pow(10.0, -pathloss_db / 10.0); }
};

/// Stream ids: user k draws its channel entries from stream k, LOS angles from kAngleStream + k.
inline constexpr std::uint64_t kAngleStream = 1ull << 32;

/// h_k = sqrt(g) z, z ~ CN(0, I_N), one Philox stream per user.
inline std::vector<UserChannel> gen_rayleigh(const ChannelScenario& scenario, const UlaConfig& ula, int k,
                                             double sigma2, double gamma_min) {
    scenario.validate();
    if (k < 0) throw ContractError("gen_rayleigh: negative user count");
    const double amp = std::sqrt(scenario.power_gain());
    std::vector<UserChannel> users;
    users.reserve(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) {
        CounterRng rng(scenario.seed, static_cast<std::uint64_t>(u));
        UserChannel ch;
        ch.h.resize(ula.num_antennas());
        for (int n = 0; n < ula.num_antennas(); ++n) ch.h(n) = amp * rng.complex_normal();
        ch.sigma2 = sigma2;
        ch.gamma_min = gamma_min;
        ch.validate(ula.num_antennas());
        users.push_back(std::move(ch));
    }
    return users;
}

/// Angles used by gen_los: the scenario's list, or uniform draws on [-pi/2, pi/2].
inline std::vector<double> los_user_angles(const ChannelScenario& scenario, int k) {
    if (scenario.user_angles) {
        if (static_cast<int>(scenario.user_angles->size()) != k)
            throw ContractError("gen_los: number of user angles does not match user count");
        return *scenario.user_angles;
    }
    std::vector<double> angles(static_cast<std::size_t>(k));
    for (int u = 0; u < k; ++u) {
        CounterRng rng(scenario.seed, kAngleStream + static_cast<std::uint64_t>(u));
        angles[u] = rng.uniform(-kPi / 2, kPi / 2);
    }
    return angles;
}

/// h_k = sqrt(g) a(theta_k).
inline std::vector<UserChannel> gen_los(const ChannelScenario& scenario, const UlaConfig& ula, int k, double sigma2,
                                        double gamma_min) {
    scenario.validate();
    const double amp = std::sqrt(scenario.power_gain());
    std::vector<UserChannel> users;
    for (double theta : los_user_angles(scenario, k)) {
        UserChannel ch;
        ch.h = amp * steering_vector(ula, theta);
        ch.sigma2 = sigma2;
        ch.gamma_min = gamma_min;
        ch.validate(ula.num_antennas());
        users.push_back(std::move(ch));
    }
    return users;
}

inline std::vector<UserChannel> gen_channels(const ChannelScenario& scenario, const UlaConfig& ula, int k,
                                             double sigma2, double gamma_min) {
    return scenario.kind == ChannelKind::Rayleigh ? gen_rayleigh(scenario, ula, k, sigma2, gamma_min)
                                                  : gen_los(scenario, ula, k, sigma2, gamma_min);
}

/// (h, sigma^2) -> (h / sigma, 1). SINR values are unchanged; conic rows become O(1).
inline std::vector<UserChannel> condition_normalize(const std::vector<UserChannel>& channels) {
    std::vector<UserChannel> out = channels;
    for (auto& ch : out) {
        ch.h /= std::sqrt(ch.sigma2);
        ch.sigma2 = 1.0;
    }
    return out;
}

}  // namespace isac
