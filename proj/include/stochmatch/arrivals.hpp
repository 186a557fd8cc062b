#pragma once

// Poisson arrival streams on [0,1] and the extended-type decomposition.
//
// Randomness is organized as counter-keyed substreams: each (seed, trial, type)
// triple seeds an independent generator, so trials are reproducible,
// order-independent, and mergeable across runs by offsetting the trial index.
// Every arrival consumes exactly three uniforms (u01, r1, r2) whether or not an
// engine uses them, which is what makes the algorithm variants couplable
// event-by-event on a shared stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "activation.hpp"
#include "instance.hpp"

namespace stochmatch {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in the open interval (0,1): odd multiples of 2^-54, so a draw never
// equals 0, 1, or any boundary value used in comparisons against f(t)-1.
inline double to_unit(std::uint64_t r) { return ((r >> 11) + 0.5) * 0x1.0p-53; }

class StreamRng {
  public:
    StreamRng(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) {
        // Three absorption rounds separate the key coordinates.
        state_ = seed;
        splitmix64(state_);
        state_ ^= trial * 0xd6e8feb86659fd93ULL;
        splitmix64(state_);
        state_ ^= stream * 0xa5cb3d9a4a8ad1a9ULL;
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }
    double uniform() { return to_unit(next_u64()); }

  private:
    std::uint64_t state_;
};

// Homogeneous Poisson(lambda) arrival times in (0,1) via exponential gaps.
inline std::vector<double> sample_stream(double lambda, StreamRng& rng) {
    if (lambda < 0.0) throw std::domain_error("negative rate");
    std::vector<double> times;
    if (lambda == 0.0) return times;
    double t = 0.0;
    for (;;) {
        t += -std::log(rng.uniform()) / lambda;
        if (t >= 1.0) break;
        times.push_back(t);
    }
    return times;
}

struct ArrivalEvent {
    double t = 0.0;
    int type = -1;      // index into Instance::online
    double u01 = 0.0;   // first-choice selector (< 0.5 picks neighbor slot 0)
    double r1 = 0.0;
    double r2 = 0.0;
};

// All arrivals of one trial, merged across type streams and sorted by time.
// Ties across streams have probability zero; if they occur they are broken by
// type index (documented, untested path).
inline std::vector<ArrivalEvent> gen_events(const Instance& inst, std::uint64_t seed,
                                            std::uint64_t trial) {
    std::vector<ArrivalEvent> events;
    for (int ty = 0; ty < static_cast<int>(inst.online.size()); ++ty) {
        StreamRng rng(seed, trial, static_cast<std::uint64_t>(ty));
        const double lambda = inst.online[ty].rate;
        double t = 0.0;
        for (;;) {
            t += -std::log(rng.uniform()) / lambda;
            if (t >= 1.0) break;
            ArrivalEvent e;
            e.t = t;
            e.type = ty;
            e.u01 = rng.uniform();
            e.r1 = rng.uniform();
            e.r2 = rng.uniform();
            events.push_back(e);
        }
    }
    std::sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
        return a.t != b.t ? a.t < b.t : a.type < b.type;
    });
    return events;
}

// Fixed-population comparison mode: round(total rate) sequential draws, arrival
// k placed at time k/n. Side-by-side empirical curves only.
inline std::vector<ArrivalEvent> gen_events_fixed_n(const Instance& inst, std::uint64_t seed,
                                                    std::uint64_t trial) {
    const double total = inst.total_rate();
    const int n = static_cast<int>(std::llround(total));
    StreamRng rng(seed, trial, 0x46495845ULL);
    std::vector<ArrivalEvent> events;
    events.reserve(n);
    for (int k = 1; k <= n; ++k) {
        const double pick = rng.uniform() * total;
        double acc = 0.0;
        int ty = 0;
        for (; ty < static_cast<int>(inst.online.size()) - 1; ++ty) {
            acc += inst.online[ty].rate;
            if (pick <= acc) break;
        }
        ArrivalEvent e;
        e.t = static_cast<double>(k) / n;
        e.type = ty;
        e.u01 = rng.uniform();
        e.r1 = rng.uniform();
        e.r2 = rng.uniform();
        events.push_back(e);
    }
    return events;
}

// Extended designation of a second-class arrival: which proposals it will make.
// Slots hold offline indices; -1 is "none".
struct Designation {
    int j1 = -1;
    int j2 = -1;
};

// The three-way split by (r1, r2) against f(t). The boundary r2 = f(t)-1 goes
// to the single-proposal type; the proposing engine uses the complementary
// strict comparison so the two formulations agree pointwise, not just in law.
inline Designation designate(const ArrivalEvent& e, const KernelInstance& k,
                             const PiecewiseConstantF& f) {
    if (k.klass[e.type] != 2)
        throw std::invalid_argument("designate is defined for second-class types only");
    const double ft = f(e.t);
    const int first = e.u01 < 0.5 ? 0 : 1;
    const int j1 = k.nbr[e.type][first];
    const int j2 = k.nbr[e.type][1 - first];
    if (e.r1 > ft) return {-1, -1};
    if (e.r2 >= ft - 1.0) return {j1, -1};
    return {j1, j2};
}

// Arrival rates of the extended types of one second-class vertex type at time t.
// Wildcards (*) include the none-slot.
struct ExtendedRateRow {
    int type = -1;
    double to_first_only[2] = {0.0, 0.0};  // i(j_s, none) for neighbor slot s
    double to_both[2] = {0.0, 0.0};        // i(j_s, j_{1-s})
    double first_any[2] = {0.0, 0.0};      // i(j_s, *)
    double any = 0.0;                      // i(*, *) = lambda_i
};

inline std::vector<ExtendedRateRow> extended_rates(const KernelInstance& k,
                                                   const PiecewiseConstantF& f, double t) {
    const double ft = f(t);
    const double p1 = std::min(ft, 1.0);
    const double pboth = std::max(ft - 1.0, 0.0);
    const double ponly = std::min(2.0 - ft, 1.0);
    std::vector<ExtendedRateRow> rows;
    for (int ty = 0; ty < k.num_types(); ++ty) {
        if (k.klass[ty] != 2) continue;
        const double half = k.inst.online[ty].rate / 2.0;
        ExtendedRateRow row;
        row.type = ty;
        for (int s = 0; s < 2; ++s) {
            row.to_first_only[s] = half * p1 * ponly;
            row.to_both[s] = half * p1 * pboth;
            row.first_any[s] = half * p1;
        }
        row.any = k.inst.online[ty].rate;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace stochmatch
