#pragma once

// Symbol-level Monte Carlo of the transmit/receive model: information symbols
// and radar streams are drawn per slot, x = sum t_k s_k + sum w_r s_r, and
// SINRs / beampatterns are measured empirically.

#include <algorithm>
#include <cstdint>
#include <future>
#include <thread>
#include <vector>

#include "isac/channels.hpp"
#include "isac/model.hpp"
#include "isac/recover.hpp"

namespace isac {

enum class Constellation { Gaussian, QPSK };

struct SimConfig {
    long num_symbols = 100000;
    std::uint64_t seed = 1;
    ReceiverType receiver = ReceiverType::TypeI;
    Constellation constellation = Constellation::Gaussian;
    /// Symbols per batch; each batch has its own derived seed.
    long batch_size = 8192;
    /// 0 = hardware concurrency.
    int threads = 0;

    void validate() const {
        if (num_symbols < 1) throw ContractError("SimConfig: num_symbols must be >= 1");
        if (batch_size < 1) throw ContractError("SimConfig: batch_size must be >= 1");
        if (threads < 0) throw ContractError("SimConfig: threads must be >= 0");
    }
};

namespace detail {

/// One Philox stream per batch feeds information symbols, radar streams and noise.
struct SymbolSource {
    CounterRng rng;
    Constellation constellation;

    cd draw() {
        if (constellation == Constellation::Gaussian) return rng.complex_normal();
        const std::uint64_t bits = rng.next_u64();
        const double s = 1.0 / std::sqrt(2.0);
        return cd((bits & 1) ? s : -s, (bits & 2) ? s : -s);
    }
};

/// Runs fn(batch_index, first_symbol, count) over batches in parallel and
/// returns the per-batch results in batch order.
template <typename Fn>
auto run_batches(const SimConfig& cfg, Fn fn) {
    using R = decltype(fn(long{}, long{}, long{}));
    const long batches = (cfg.num_symbols + cfg.batch_size - 1) / cfg.batch_size;
    std::vector<R> out(static_cast<std::size_t>(batches));
    int threads = cfg.threads ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = static_cast<int>(std::min<long>(threads, batches));
    std::vector<std::future<void>> jobs;
    for (int t = 0; t < threads; ++t) {
        jobs.push_back(std::async(std::launch::async, [&, t] {
            for (long b = t; b < batches; b += threads) {
                const long first = b * cfg.batch_size;
                out[b] = fn(b, first, std::min(cfg.batch_size, cfg.num_symbols - first));
            }
        }));
    }
    for (auto& j : jobs) j.get();
    return out;
}

/// Draws one slot: information symbols and the radar signal s_0 = sum w_r s_r.
struct SlotGenerator {
    std::vector<CVec> radar;

    void draw(SymbolSource& src, std::vector<cd>& info, CVec& s0) const {
        for (auto& s : info) s = src.draw();
        s0.setZero();
        for (const auto& w : radar) s0 += w * src.rng.complex_normal();
    }
};

}  // namespace detail

/// Empirical SINR per user: mean desired-signal power over mean residual power.
/// Type-II receivers subtract h^H s_0 before measuring.
inline std::vector<double> simulate_sinr(const BeamformingSolution& sol, const std::vector<UserChannel>& channels,
                                         const SimConfig& cfg) {
    cfg.validate();
    const int k_users = sol.num_users();
    if (static_cast<int>(channels.size()) != k_users)
        throw ContractError("simulate_sinr: channel count does not match user count");
    if (k_users == 0) return {};
    const Eigen::Index n = sol.info_beamformers[0].size();
    const detail::SlotGenerator gen{radar_beamformers(sol.radar_covariance)};

    // h_i^H t_k.
    CMat ht(k_users, k_users);
    for (int i = 0; i < k_users; ++i)
        for (int k = 0; k < k_users; ++k) ht(i, k) = channels[i].h.dot(sol.info_beamformers[k]);

    struct Acc {
        std::vector<double> signal, residual;
    };
    auto batches = detail::run_batches(cfg, [&](long b, long, long count) {
        detail::SymbolSource src{CounterRng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(b)}), 0),
                                 cfg.constellation};
        Acc acc{std::vector<double>(k_users, 0.0), std::vector<double>(k_users, 0.0)};
        std::vector<cd> info(static_cast<std::size_t>(k_users));
        CVec s0(n);
        CVec sym(k_users);
        for (long t = 0; t < count; ++t) {
            gen.draw(src, info, s0);
            for (int k = 0; k < k_users; ++k) sym(k) = info[k];
            for (int i = 0; i < k_users; ++i) {
                const double sigma = std::sqrt(channels[i].sigma2);
                const cd noise = sigma * src.rng.complex_normal();
                const cd desired = ht(i, i) * sym(i);
                cd y = (ht.row(i) * sym)(0) + channels[i].h.dot(s0) + noise;
                if (cfg.receiver == ReceiverType::TypeII) y -= channels[i].h.dot(s0);
                acc.signal[i] += std::norm(desired);
                acc.residual[i] += std::norm(y - desired);
            }
        }
        return acc;
    });

    std::vector<double> signal(k_users, 0.0), residual(k_users, 0.0);
    for (const auto& a : batches) {
        for (int i = 0; i < k_users; ++i) {
            signal[i] += a.signal[i];
            residual[i] += a.residual[i];
        }
    }
    std::vector<double> out(k_users);
    for (int i = 0; i < k_users; ++i) out[i] = signal[i] / residual[i];
    return out;
}

/// Sample mean of |a^H(theta) x|^2 per grid angle.
inline std::vector<double> empirical_beampattern(const BeamformingSolution& sol, const UlaConfig& ula,
                                                 const std::vector<double>& theta_grid, const SimConfig& cfg) {
    cfg.validate();
    const int k_users = sol.num_users();
    const Eigen::Index n = ula.num_antennas();
    for (const auto& t : sol.info_beamformers)
        if (t.size() != n) throw ContractError("empirical_beampattern: beamformer size mismatch");
    if (sol.radar_covariance.size() && sol.radar_covariance.rows() != n)
        throw ContractError("empirical_beampattern: radar covariance size mismatch");
    const detail::SlotGenerator gen{radar_beamformers(sol.radar_covariance)};

    CMat steer(n, static_cast<Eigen::Index>(theta_grid.size()));
    for (std::size_t m = 0; m < theta_grid.size(); ++m) steer.col(m) = steering_vector(ula, theta_grid[m]);

    auto batches = detail::run_batches(cfg, [&](long b, long, long count) {
        detail::SymbolSource src{CounterRng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(b)}), 0),
                                 cfg.constellation};
        RVec acc = RVec::Zero(steer.cols());
        std::vector<cd> info(static_cast<std::size_t>(k_users));
        CVec s0(n);
        CVec x(n);
        for (long t = 0; t < count; ++t) {
            gen.draw(src, info, s0);
            x = s0;
            for (int k = 0; k < k_users; ++k) x += sol.info_beamformers[k] * info[k];
            acc += (steer.adjoint() * x).cwiseAbs2();
        }
        return acc;
    });

    RVec total = RVec::Zero(steer.cols());
    for (const auto& a : batches) total += a;
    total /= static_cast<double>(cfg.num_symbols);
    return std::vector<double>(total.data(), total.data() + total.size());
}

}  // namespace isac
