#pragma once

// Matching engines. All four are pure functions of (instance, f, event list):
// every bit of randomness lives in the events, so different formulations can be
// coupled on a shared stream and compared record-by-record.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "activation.hpp"
#include "arrivals.hpp"
#include "instance.hpp"

namespace stochmatch {

struct MatchRecord {
    int event = -1;    // index into the event list
    int type = -1;     // online type
    int offline = -1;  // offline vertex index
    double t = 0.0;
};

struct Matching {
    std::vector<MatchRecord> records;  // in event order
    std::vector<double> match_time;    // per offline vertex; +inf if unmatched

    explicit Matching(int num_offline = 0)
        : match_time(num_offline, std::numeric_limits<double>::infinity()) {}

    bool matched(int offline) const {
        return match_time[offline] < std::numeric_limits<double>::infinity();
    }
    // "Unmatched at t" means no match strictly before processing events at time t.
    bool unmatched_at(int offline, double t) const { return match_time[offline] >= t; }

    bool try_match(int event, int type, int offline, double t) {
        if (matched(offline)) return false;
        match_time[offline] = t;
        records.push_back({event, type, offline, t});
        return true;
    }

    bool operator==(const Matching& o) const {
        if (match_time != o.match_time || records.size() != o.records.size()) return false;
        for (size_t r = 0; r < records.size(); ++r) {
            if (records[r].event != o.records[r].event || records[r].type != o.records[r].type ||
                records[r].offline != o.records[r].offline || records[r].t != o.records[r].t)
                return false;
        }
        return true;
    }
};

// The evolving-activation engine: first-class arrivals always propose to their
// unique neighbor; a second-class arrival proposes to its first choice iff
// r1 <= f(t) and, if that vertex is already matched, to its second choice iff
// r2 < f(t) - 1 (the complement of the single-proposal designation).
inline Matching run_esm(const KernelInstance& k, const PiecewiseConstantF& f,
                        const std::vector<ArrivalEvent>& events) {
    Matching m(k.num_offline());
    for (int idx = 0; idx < static_cast<int>(events.size()); ++idx) {
        const auto& e = events[idx];
        if (e.type < 0 || e.type >= k.num_types())
            throw std::invalid_argument("event type unknown to instance");
        if (k.klass[e.type] == 1) {
            m.try_match(idx, e.type, k.nbr[e.type][0], e.t);
            continue;
        }
        const double ft = f(e.t);
        const int first = e.u01 < 0.5 ? 0 : 1;
        const int j1 = k.nbr[e.type][first];
        const int j2 = k.nbr[e.type][1 - first];
        if (e.r1 <= ft) {
            if (!m.try_match(idx, e.type, j1, e.t) && e.r2 < ft - 1.0)
                m.try_match(idx, e.type, j2, e.t);
        }
    }
    return m;
}

// The same algorithm driven purely by extended designations: i(j, none)
// proposes to j only; i(j, j') proposes to j, then to j' if j was taken.
inline Matching run_esm_extended(const KernelInstance& k, const PiecewiseConstantF& f,
                                 const std::vector<ArrivalEvent>& events) {
    Matching m(k.num_offline());
    for (int idx = 0; idx < static_cast<int>(events.size()); ++idx) {
        const auto& e = events[idx];
        if (e.type < 0 || e.type >= k.num_types())
            throw std::invalid_argument("event type unknown to instance");
        if (k.klass[e.type] == 1) {
            m.try_match(idx, e.type, k.nbr[e.type][0], e.t);
            continue;
        }
        const Designation d = designate(e, k, f);
        if (d.j1 < 0) continue;
        if (!m.try_match(idx, e.type, d.j1, e.t) && d.j2 >= 0)
            m.try_match(idx, e.type, d.j2, e.t);
    }
    return m;
}

// One-shot proposals: an arrival of type i proposes to neighbor j with
// probability x_ij / lambda_i (and makes no proposal with the leftover mass).
// Works on general instances; r1 decides whether to propose at all, u01 picks
// the neighbor by cumulative x_ij / x_i. On a kernel with f == 1 this consumes
// randomness identically to run_esm, making the two pathwise equal there.
inline Matching run_suggested(const Instance& inst, const FractionalSolution& x,
                              const std::vector<ArrivalEvent>& events) {
    const int nt = static_cast<int>(inst.online.size());
    std::vector<double> xi(nt, 0.0);
    std::vector<std::vector<double>> cum(nt);
    std::vector<std::vector<int>> nbr_idx(nt);
    for (int ty = 0; ty < nt; ++ty) {
        const auto& ot = inst.online[ty];
        double s = 0.0;
        for (const auto& n : ot.neighbors) {
            s += x.at(ot.id, n);
            cum[ty].push_back(s);
            nbr_idx[ty].push_back(inst.offline_index(n));
        }
        xi[ty] = s;
        if (s > ot.rate + 1e-9)
            throw std::invalid_argument("x_i > lambda_i for type " + ot.id);
    }
    Matching m(static_cast<int>(inst.offline.size()));
    for (int idx = 0; idx < static_cast<int>(events.size()); ++idx) {
        const auto& e = events[idx];
        const double lambda = inst.online[e.type].rate;
        if (xi[e.type] <= 0.0) continue;
        if (e.r1 > xi[e.type] / lambda) continue;
        const double pick = e.u01 * xi[e.type];
        int s = 0;
        while (s < static_cast<int>(cum[e.type].size()) - 1 && pick > cum[e.type][s]) ++s;
        m.try_match(idx, e.type, nbr_idx[e.type][s], e.t);
    }
    return m;
}

// run_esm with the key types of j' silenced before time x: arrivals of
// first-class neighbors of j', and second-class arrivals whose designation
// mentions j' in either slot, are skipped entirely when t < x.
inline Matching run_with_key_filter(const KernelInstance& k, const PiecewiseConstantF& f,
                                    const std::vector<ArrivalEvent>& events, int jprime,
                                    double x) {
    if (jprime < 0 || jprime >= k.num_offline())
        throw std::invalid_argument("unknown offline vertex index");
    Matching m(k.num_offline());
    for (int idx = 0; idx < static_cast<int>(events.size()); ++idx) {
        const auto& e = events[idx];
        if (k.klass[e.type] == 1) {
            if (e.t < x && k.nbr[e.type][0] == jprime) continue;
            m.try_match(idx, e.type, k.nbr[e.type][0], e.t);
            continue;
        }
        const Designation d = designate(e, k, f);
        if (e.t < x && (d.j1 == jprime || d.j2 == jprime)) continue;
        if (d.j1 < 0) continue;
        if (!m.try_match(idx, e.type, d.j1, e.t) && d.j2 >= 0)
            m.try_match(idx, e.type, d.j2, e.t);
    }
    return m;
}

// Structural validity: each offline vertex matched at most once, each event at
// most once, matched edges exist, match times non-decreasing in event order.
inline bool valid_matching(const KernelInstance& k, const std::vector<ArrivalEvent>& events,
                           const Matching& m) {
    std::vector<int> off_count(k.num_offline(), 0);
    std::vector<int> ev_count(events.size(), 0);
    double last_t = 0.0;
    for (const auto& r : m.records) {
        if (r.offline < 0 || r.offline >= k.num_offline()) return false;
        if (r.event < 0 || r.event >= static_cast<int>(events.size())) return false;
        if (++off_count[r.offline] > 1) return false;
        if (++ev_count[r.event] > 1) return false;
        if (r.type != events[r.event].type || r.t != events[r.event].t) return false;
        const auto& nb = k.nbr[r.type];
        if (nb[0] != r.offline && nb[1] != r.offline) return false;
        if (r.t < last_t) return false;
        last_t = r.t;
        if (m.match_time[r.offline] != r.t) return false;
    }
    int matched = 0;
    for (int j = 0; j < k.num_offline(); ++j)
        if (m.matched(j)) ++matched;
    return matched == static_cast<int>(m.records.size());
}

}  // namespace stochmatch
