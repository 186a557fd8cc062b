#pragma once

// Seeded Monte Carlo estimation of matching probabilities and unmatched-vertex
// trajectories, with normal-approximation standard errors.
//
// Trials are keyed by (seed, trial index) through the substream scheme in
// arrivals.hpp, so a run is reproducible bit-for-bit for fixed (seed, N),
// independent of thread count, and two half runs at offsets 0 and N/2 sum to
// exactly the counts of one full run.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "activation.hpp"
#include "arrivals.hpp"
#include "engines.hpp"
#include "instance.hpp"

namespace stochmatch {

enum class Engine { Esm, Sm, TwoChoice, Msm };

inline const char* engine_name(Engine e) {
    switch (e) {
        case Engine::Esm: return "esm";
        case Engine::Sm: return "sm";
        case Engine::TwoChoice: return "two-choice";
        case Engine::Msm: return "msm";
    }
    return "?";
}

struct EstimateOptions {
    long trials = 1000000;
    std::uint64_t seed = 42;
    std::uint64_t trial_offset = 0;
    std::vector<double> grid;  // default: 101 equispaced points on [0,1]
    std::vector<std::pair<int, int>> joint_pairs;
    int threads = 0;  // 0 = hardware concurrency
    bool fixed_n = false;
};

inline std::vector<double> default_grid(int points = 101) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = static_cast<double>(i) / (points - 1);
    return g;
}

struct EdgeStat {
    int type = -1;
    int slot = 0;
    int offline = -1;
    double x = 0.0;
    long count = 0;
    double phat = 0.0;
    double se = 0.0;
};

struct EstimateReport {
    long trials = 0;
    std::uint64_t seed = 0;
    std::uint64_t trial_offset = 0;
    Engine engine = Engine::Esm;
    std::vector<double> grid;
    std::vector<EdgeStat> edges;
    // unmatched[j][g] counts trials with match_time_j >= grid[g].
    std::vector<std::vector<long>> unmatched;
    std::vector<std::pair<int, int>> joint_pairs;
    std::vector<std::vector<long>> joint_unmatched;

    double phat_unmatched(int j, int g) const {
        return static_cast<double>(unmatched[j][g]) / trials;
    }
    double se_unmatched(int j, int g) const {
        const double p = phat_unmatched(j, g);
        return std::sqrt(p * (1.0 - p) / trials);
    }
    double phat_joint(int pair, int g) const {
        return static_cast<double>(joint_unmatched[pair][g]) / trials;
    }
    double se_joint(int pair, int g) const {
        const double p = phat_joint(pair, g);
        return std::sqrt(p * (1.0 - p) / trials);
    }
};

namespace detail {

struct Accumulator {
    std::vector<long> edge_counts;
    // Histogram over "number of grid points <= match_time": suffix sums later
    // give the per-grid unmatched counts in O(grid) instead of O(grid * trials).
    std::vector<std::vector<long>> pos_hist;
    std::vector<std::vector<long>> joint_pos_hist;

    Accumulator(size_t nedges, size_t noff, size_t npairs, size_t ngrid)
        : edge_counts(nedges, 0),
          pos_hist(noff, std::vector<long>(ngrid + 1, 0)),
          joint_pos_hist(npairs, std::vector<long>(ngrid + 1, 0)) {}

    void add(Accumulator const& o) {
        for (size_t i = 0; i < edge_counts.size(); ++i) edge_counts[i] += o.edge_counts[i];
        for (size_t j = 0; j < pos_hist.size(); ++j)
            for (size_t g = 0; g < pos_hist[j].size(); ++g) pos_hist[j][g] += o.pos_hist[j][g];
        for (size_t p = 0; p < joint_pos_hist.size(); ++p)
            for (size_t g = 0; g < joint_pos_hist[p].size(); ++g)
                joint_pos_hist[p][g] += o.joint_pos_hist[p][g];
    }
};

inline int grid_pos(const std::vector<double>& grid, double match_time) {
    // Number of grid values <= match_time (match_time = +inf gives grid size).
    return static_cast<int>(std::upper_bound(grid.begin(), grid.end(), match_time) -
                            grid.begin());
}

}  // namespace detail

inline EstimateReport estimate(const KernelInstance& k, Engine eng, const PiecewiseConstantF& f,
                               const EstimateOptions& opt) {
    if (opt.trials < 1) throw std::invalid_argument("trials must be >= 1");
    const std::vector<double> grid = opt.grid.empty() ? default_grid() : opt.grid;
    if (grid.front() < 0.0 || grid.back() > 1.0)
        throw std::invalid_argument("time grid must lie in [0,1]");
    for (size_t g = 1; g < grid.size(); ++g)
        if (!(grid[g] > grid[g - 1]))
            throw std::invalid_argument("time grid must be strictly increasing");

    // Edge enumeration in deterministic (type, slot) order.
    std::vector<EdgeStat> edges;
    for (int ty = 0; ty < k.num_types(); ++ty)
        for (int s = 0; s < (k.klass[ty] == 2 ? 2 : 1); ++s)
            edges.push_back({ty, s, k.nbr[ty][s], k.edge_x(ty), 0, 0.0, 0.0});
    // edge_of[type][slot] -> index into edges
    std::vector<std::array<int, 2>> edge_of(k.num_types(), {-1, -1});
    for (int i = 0; i < static_cast<int>(edges.size()); ++i)
        edge_of[edges[i].type][edges[i].slot] = i;

    const PiecewiseConstantF& f_use = f;
    const PiecewiseConstantF f_two = flat_f(1, 2.0);
    const PiecewiseConstantF f_msm = msm_f();

    auto run_trial = [&](std::uint64_t trial) -> Matching {
        const auto events = opt.fixed_n ? gen_events_fixed_n(k.inst, opt.seed, trial)
                                        : gen_events(k.inst, opt.seed, trial);
        switch (eng) {
            case Engine::Esm: return run_esm(k, f_use, events);
            case Engine::Sm: return run_suggested(k.inst, k.x, events);
            case Engine::TwoChoice: return run_esm(k, f_two, events);
            case Engine::Msm: return run_esm(k, f_msm, events);
        }
        throw std::logic_error("unknown engine");
    };

    const size_t ngrid = grid.size();
    auto worker = [&](std::uint64_t lo, std::uint64_t hi, detail::Accumulator& acc) {
        for (std::uint64_t trial = lo; trial < hi; ++trial) {
            const Matching m = run_trial(trial);
            for (const auto& r : m.records) {
                const int s = k.nbr[r.type][0] == r.offline ? 0 : 1;
                ++acc.edge_counts[edge_of[r.type][s]];
            }
            for (int j = 0; j < k.num_offline(); ++j)
                ++acc.pos_hist[j][detail::grid_pos(grid, m.match_time[j])];
            for (size_t p = 0; p < opt.joint_pairs.size(); ++p) {
                const double tmin = std::min(m.match_time[opt.joint_pairs[p].first],
                                             m.match_time[opt.joint_pairs[p].second]);
                ++acc.joint_pos_hist[p][detail::grid_pos(grid, tmin)];
            }
        }
    };

    unsigned nthreads = opt.threads > 0 ? static_cast<unsigned>(opt.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<unsigned>(nthreads, 16);
    const std::uint64_t lo = opt.trial_offset;
    const std::uint64_t hi = opt.trial_offset + static_cast<std::uint64_t>(opt.trials);

    detail::Accumulator total(edges.size(), k.num_offline(), opt.joint_pairs.size(), ngrid);
    if (nthreads <= 1 || opt.trials < 1000) {
        worker(lo, hi, total);
    } else {
        std::vector<detail::Accumulator> accs(
            nthreads,
            detail::Accumulator(edges.size(), k.num_offline(), opt.joint_pairs.size(), ngrid));
        std::vector<std::thread> threads;
        const std::uint64_t chunk = (hi - lo + nthreads - 1) / nthreads;
        for (unsigned w = 0; w < nthreads; ++w) {
            const std::uint64_t a = lo + w * chunk;
            const std::uint64_t b = std::min(hi, a + chunk);
            if (a >= b) break;
            threads.emplace_back([&, a, b, w] { worker(a, b, accs[w]); });
        }
        for (auto& t : threads) t.join();
        for (const auto& acc : accs) total.add(acc);
    }

    EstimateReport rep;
    rep.trials = opt.trials;
    rep.seed = opt.seed;
    rep.trial_offset = opt.trial_offset;
    rep.engine = eng;
    rep.grid = grid;
    rep.edges = std::move(edges);
    for (size_t i = 0; i < rep.edges.size(); ++i) {
        auto& es = rep.edges[i];
        es.count = total.edge_counts[i];
        es.phat = static_cast<double>(es.count) / opt.trials;
        es.se = std::sqrt(es.phat * (1.0 - es.phat) / opt.trials);
    }
    rep.unmatched.assign(k.num_offline(), std::vector<long>(ngrid, 0));
    for (int j = 0; j < k.num_offline(); ++j) {
        long suffix = 0;
        for (int g = static_cast<int>(ngrid); g >= 1; --g) {
            suffix += total.pos_hist[j][g];
            rep.unmatched[j][g - 1] = suffix;
        }
    }
    rep.joint_pairs = opt.joint_pairs;
    rep.joint_unmatched.assign(opt.joint_pairs.size(), std::vector<long>(ngrid, 0));
    for (size_t p = 0; p < opt.joint_pairs.size(); ++p) {
        long suffix = 0;
        for (int g = static_cast<int>(ngrid); g >= 1; --g) {
            suffix += total.joint_pos_hist[p][g];
            rep.joint_unmatched[p][g - 1] = suffix;
        }
    }
    return rep;
}

struct RatioSummary {
    double alpha = 0.0;  // min over edges with x > 0 of phat / x
    double se = 0.0;     // se of the argmin edge's phat, scaled by 1/x
    int argmin_type = -1;
    int argmin_slot = 0;
    int argmin_offline = -1;
    std::string argmin_i_id, argmin_j_id;
};

inline RatioSummary ratio_report(const KernelInstance& k, const EstimateReport& rep) {
    RatioSummary out;
    bool any = false;
    for (const auto& e : rep.edges) {
        if (e.x <= 0.0) continue;  // ratio undefined
        const double ratio = e.phat / e.x;
        if (!any || ratio < out.alpha) {
            any = true;
            out.alpha = ratio;
            out.se = e.se / e.x;
            out.argmin_type = e.type;
            out.argmin_slot = e.slot;
            out.argmin_offline = e.offline;
        }
    }
    if (!any) throw std::invalid_argument("no edges with positive x");
    out.argmin_i_id = k.inst.online[out.argmin_type].id;
    out.argmin_j_id = k.inst.offline[out.argmin_offline];
    return out;
}

}  // namespace stochmatch
