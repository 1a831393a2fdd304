#include <gtest/gtest.h>

#include <random>

#include "isac/simulate.hpp"

using namespace isac;

namespace {

struct Fixture {
    UlaConfig ula{6};
    std::vector<UserChannel> channels;
    BeamformingSolution sol;
};

Fixture make_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Fixture f;
    const int n = 6;
    for (int k = 0; k < 3; ++k) {
        UserChannel ch;
        ch.h = CVec(n);
        CVec t(n);
        for (int i = 0; i < n; ++i) {
            ch.h(i) = cd(nd(rng), nd(rng));
            t(i) = 0.3 * cd(nd(rng), nd(rng));
        }
        ch.sigma2 = 0.5;
        f.channels.push_back(ch);
        f.sol.info_beamformers.push_back(t);
    }
    CMat g(n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 2; ++j) g(i, j) = 0.2 * cd(nd(rng), nd(rng));
    f.sol.radar_covariance = g * g.adjoint();
    return f;
}

}  // namespace

TEST(SimulateSinr, MatchesAnalyticWithinTwoPercent) {
    const auto f = make_fixture(1);
    for (auto rx : {ReceiverType::TypeI, ReceiverType::TypeII}) {
        for (auto cons : {Constellation::Gaussian, Constellation::QPSK}) {
            SimConfig cfg;
            cfg.receiver = rx;
            cfg.constellation = cons;
            const auto emp = simulate_sinr(f.sol, f.channels, cfg);
            for (int i = 0; i < 3; ++i) {
                const double want = sinr(rx, f.channels, f.sol, i);
                EXPECT_NEAR(emp[i] / want, 1.0, 0.02) << "user " << i;
            }
        }
    }
}

TEST(SimulateSinr, TypeTwoDominatesTypeOne) {
    const auto f = make_fixture(2);
    SimConfig cfg;
    cfg.num_symbols = 20000;
    const auto one = simulate_sinr(f.sol, f.channels, cfg);
    cfg.receiver = ReceiverType::TypeII;
    const auto two = simulate_sinr(f.sol, f.channels, cfg);
    for (int i = 0; i < 3; ++i) EXPECT_GE(two[i], one[i]);
}

TEST(SimulateSinr, ZeroTransmitGivesZero) {
    auto f = make_fixture(3);
    for (auto& t : f.sol.info_beamformers) t.setZero();
    f.sol.radar_covariance.setZero();
    SimConfig cfg;
    cfg.num_symbols = 1000;
    for (double v : simulate_sinr(f.sol, f.channels, cfg)) EXPECT_EQ(v, 0.0);
    for (double v : empirical_beampattern(f.sol, f.ula, uniform_angle_grid(11), cfg)) EXPECT_EQ(v, 0.0);
}

TEST(SimulateSinr, ErrorShrinksLikeInverseSqrtOfSymbols) {
    const auto f = make_fixture(4);
    const double want = sinr(ReceiverType::TypeI, f.channels, f.sol, 0);
    auto rms = [&](long symbols) {
        double acc = 0.0;
        const int seeds = 24;
        for (int s = 0; s < seeds; ++s) {
            SimConfig cfg;
            cfg.num_symbols = symbols;
            cfg.seed = 100 + s;
            const double e = simulate_sinr(f.sol, f.channels, cfg)[0] / want - 1.0;
            acc += e * e;
        }
        return std::sqrt(acc / seeds);
    };
    const double e_small = rms(1000);
    const double e_large = rms(100000);
    EXPECT_LE(e_large, 1.5 * e_small / 10.0) << e_small << " -> " << e_large;
    EXPECT_GT(e_small, 0.0);
}

TEST(SimulateSinr, DeterministicAcrossThreadCounts) {
    const auto f = make_fixture(5);
    SimConfig cfg;
    cfg.num_symbols = 50000;
    cfg.batch_size = 1000;
    cfg.threads = 1;
    const auto a = simulate_sinr(f.sol, f.channels, cfg);
    const auto pa = empirical_beampattern(f.sol, f.ula, uniform_angle_grid(21), cfg);
    for (int threads : {2, 7, 0}) {
        cfg.threads = threads;
        EXPECT_EQ(simulate_sinr(f.sol, f.channels, cfg), a);
        EXPECT_EQ(empirical_beampattern(f.sol, f.ula, uniform_angle_grid(21), cfg), pa);
    }
    cfg.seed = 2;
    EXPECT_NE(simulate_sinr(f.sol, f.channels, cfg), a);
}

TEST(SimulateSinr, Validation) {
    const auto f = make_fixture(6);
    SimConfig cfg;
    cfg.num_symbols = 0;
    EXPECT_THROW(simulate_sinr(f.sol, f.channels, cfg), ContractError);
    cfg.num_symbols = 10;
    cfg.threads = -1;
    EXPECT_THROW(simulate_sinr(f.sol, f.channels, cfg), ContractError);
    cfg.threads = 0;
    EXPECT_THROW(simulate_sinr(f.sol, {f.channels[0]}, cfg), ContractError);
}

TEST(EmpiricalBeampattern, MatchesAnalyticWithinThreePercent) {
    const auto f = make_fixture(7);
    const CMat x = aggregate_covariance(f.sol);
    const auto grid = uniform_angle_grid(61);
    for (auto cons : {Constellation::Gaussian, Constellation::QPSK}) {
        SimConfig cfg;
        cfg.constellation = cons;
        const auto emp = empirical_beampattern(f.sol, f.ula, grid, cfg);
        double peak = 0.0;
        for (double th : grid) peak = std::max(peak, beampattern_gain(f.ula, x, th));
        for (std::size_t m = 0; m < grid.size(); ++m) {
            const double want = beampattern_gain(f.ula, x, grid[m]);
            // Relative near the main lobes, absolute (in units of the peak) in the nulls.
            EXPECT_LE(std::abs(emp[m] - want), 0.03 * std::max(want, 0.1 * peak)) << "theta " << grid[m];
        }
    }
}
