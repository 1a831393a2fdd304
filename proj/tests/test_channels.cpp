#include <gtest/gtest.h>

#include <set>

#include "isac/channels.hpp"

using namespace isac;

TEST(Philox, KnownAnswerVectors) {
    // Reference vectors of the Philox4x32-10 bijection.
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    EXPECT_EQ(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}), (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}),
              (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}),
              (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(CounterRng, StreamsAreDistinctAndReproducible) {
    CounterRng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        seen.insert(x);
        seen.insert(c.next_u64());
        seen.insert(d.next_u64());
    }
    EXPECT_EQ(seen.size(), 300u);
}

TEST(CounterRng, NormalMoments) {
    CounterRng rng(5, 0);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const cd z = rng.complex_normal();
        sum += z.real() + z.imag();
        sq += std::norm(z);
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(DeriveSeed, IndexSensitive) {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 10; ++i)
        for (std::uint64_t j = 0; j < 10; ++j) seeds.insert(derive_seed(1, {i, j}));
    EXPECT_EQ(seeds.size(), 100u);
    EXPECT_EQ(derive_seed(9, {1, 2}), derive_seed(9, {1, 2}));
    EXPECT_NE(derive_seed(9, {1, 2}), derive_seed(9, {2, 1}));
}

TEST(Rayleigh, PathlossSetsMeanPower) {
    // E||h||^2 = N * 10^(-8) at 80 dB.
    const UlaConfig ula(8);
    double total = 0.0;
    const int draws = 10000;
    for (int s = 0; s < draws / 5; ++s) {
        ChannelScenario sc;
        sc.seed = derive_seed(77, {static_cast<std::uint64_t>(s)});
        for (const auto& ch : gen_rayleigh(sc, ula, 5, 1e-10, 1.0)) total += ch.h.squaredNorm();
    }
    EXPECT_NEAR(total / draws / 8e-8, 1.0, 0.03);

    ChannelScenario unit;
    unit.pathloss_db = 0.0;
    double per_entry = 0.0;
    for (int s = 0; s < 400; ++s) {
        unit.seed = 1000 + s;
        for (const auto& ch : gen_rayleigh(unit, ula, 5, 1.0, 0.0)) per_entry += ch.h.squaredNorm() / 8;
    }
    EXPECT_NEAR(per_entry / 2000, 1.0, 0.03);
}

TEST(Rayleigh, DeterministicPerSeed) {
    ChannelScenario sc;
    sc.seed = 1234;
    const auto a = gen_rayleigh(sc, UlaConfig(8), 5, 1e-10, 10.0);
    const auto b = gen_rayleigh(sc, UlaConfig(8), 5, 1e-10, 10.0);
    ASSERT_EQ(a.size(), 5u);
    for (int k = 0; k < 5; ++k) {
        EXPECT_EQ(a[k].h, b[k].h);
        EXPECT_EQ(a[k].sigma2, 1e-10);
        EXPECT_EQ(a[k].gamma_min, 10.0);
    }
    // Users draw from independent streams: the first users do not depend on K.
    const auto c = gen_rayleigh(sc, UlaConfig(8), 3, 1e-10, 10.0);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(c[k].h, a[k].h);
    sc.seed = 1235;
    EXPECT_NE(gen_rayleigh(sc, UlaConfig(8), 1, 1e-10, 10.0)[0].h, a[0].h);
}

TEST(Los, ScaledSteeringVectors) {
    ChannelScenario sc;
    sc.kind = ChannelKind::LOS;
    sc.pathloss_db = 0.0;
    sc.user_angles = std::vector<double>{0.0, kPi / 6};
    const auto ch = gen_los(sc, UlaConfig(4), 2, 1.0, 1.0);
    for (int n = 0; n < 4; ++n) EXPECT_NEAR(std::abs(ch[0].h(n) - cd(1.0, 0.0)), 0.0, 1e-15);
    EXPECT_LT((ch[1].h - steering_vector(UlaConfig(4), kPi / 6)).norm(), 1e-15);

    sc.pathloss_db = 80.0;
    sc.user_angles.reset();
    const auto drawn = gen_los(sc, UlaConfig(8), 5, 1e-10, 1.0);
    const auto angles = los_user_angles(sc, 5);
    for (int k = 0; k < 5; ++k) {
        EXPECT_LE(std::abs(angles[k]), kPi / 2);
        EXPECT_NEAR(drawn[k].h.squaredNorm(), 8e-8, 1e-20);
        for (int n = 0; n < 8; ++n) EXPECT_NEAR(std::abs(drawn[k].h(n)), 1e-4, 1e-18);
        EXPECT_LT((drawn[k].h - 1e-4 * steering_vector(UlaConfig(8), angles[k])).norm(), 1e-18);
    }
}

TEST(Los, AngleValidation) {
    ChannelScenario sc;
    sc.kind = ChannelKind::LOS;
    sc.user_angles = std::vector<double>{0.1};
    EXPECT_THROW(gen_los(sc, UlaConfig(4), 2, 1.0, 1.0), ContractError);
    sc.user_angles = std::vector<double>{2.0};
    EXPECT_THROW(gen_los(sc, UlaConfig(4), 1, 1.0, 1.0), DomainError);
    sc.pathloss_db = -1.0;
    EXPECT_THROW(gen_los(sc, UlaConfig(4), 1, 1.0, 1.0), ContractError);
}

TEST(ConditionNormalize, UnitNoiseAndInvariantSinr) {
    ChannelScenario sc;
    auto raw = gen_rayleigh(sc, UlaConfig(6), 3, 1e-10, 2.0);
    const auto norm = condition_normalize(raw);
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(norm[k].sigma2, 1.0);
        EXPECT_LT((norm[k].h - raw[k].h * 1e5).norm(), 1e-12 * norm[k].h.norm());
        EXPECT_EQ(norm[k].gamma_min, 2.0);
    }
    BeamformingSolution sol;
    CounterRng rng(3, 0);
    for (int k = 0; k < 3; ++k) {
        CVec t(6);
        for (int n = 0; n < 6; ++n) t(n) = 0.01 * rng.complex_normal();
        sol.info_beamformers.push_back(t);
    }
    sol.radar_covariance = CMat::Identity(6, 6) * 1e-3;
    for (auto rx : {ReceiverType::TypeI, ReceiverType::TypeII}) {
        for (int i = 0; i < 3; ++i) {
            const double a = sinr(rx, raw, sol, i);
            EXPECT_NEAR(sinr(rx, norm, sol, i), a, 1e-12 * a);
        }
    }
}
