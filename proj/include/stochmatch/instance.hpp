#pragma once

// Bipartite instances for online stochastic matching under Poisson arrivals:
// online types with rates and neighbor lists, offline vertices, edge weights,
// fractional solutions, and the validated kernel structure (first/second-class
// types, y_j, competitor map).

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stochmatch {

inline double ystar() { return 1.0 - std::log(2.0); }

struct OnlineType {
    std::string id;
    double rate = 0.0;
    std::vector<std::string> neighbors;
};

struct Edge {
    std::string i;
    std::string j;
    double w = 0.0;
};

struct Instance {
    std::vector<OnlineType> online;
    std::vector<std::string> offline;
    std::vector<Edge> edges;

    double total_rate() const {
        double s = 0.0;
        for (const auto& t : online) s += t.rate;
        return s;
    }

    int online_index(const std::string& id) const {
        for (int k = 0; k < static_cast<int>(online.size()); ++k)
            if (online[k].id == id) return k;
        return -1;
    }

    int offline_index(const std::string& id) const {
        for (int k = 0; k < static_cast<int>(offline.size()); ++k)
            if (offline[k] == id) return k;
        return -1;
    }
};

// LP variable vector x over edges, keyed by (online id, offline id).
struct FractionalSolution {
    std::map<std::pair<std::string, std::string>, double> x;

    double at(const std::string& i, const std::string& j) const {
        auto it = x.find({i, j});
        return it == x.end() ? 0.0 : it->second;
    }

    double x_i(const std::string& i) const {
        double s = 0.0;
        for (const auto& [key, v] : x)
            if (key.first == i) s += v;
        return s;
    }

    double x_j(const std::string& j) const {
        double s = 0.0;
        for (const auto& [key, v] : x)
            if (key.second == j) s += v;
        return s;
    }
};

struct ValidationReport {
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

inline ValidationReport validate_instance(const Instance& inst) {
    ValidationReport rep;
    auto flag = [&](const std::string& msg) { rep.problems.push_back(msg); };

    std::set<std::string> offline_ids(inst.offline.begin(), inst.offline.end());
    if (offline_ids.size() != inst.offline.size())
        flag("duplicate offline id");

    std::set<std::string> online_ids;
    for (const auto& t : inst.online) {
        if (!online_ids.insert(t.id).second)
            flag("duplicate online id: " + t.id);
        if (!(t.rate > 0.0))
            flag("nonpositive rate: " + t.id);
        std::set<std::string> seen;
        for (const auto& n : t.neighbors) {
            if (!offline_ids.count(n))
                flag("dangling neighbor: " + t.id + " -> " + n);
            if (!seen.insert(n).second)
                flag("duplicate neighbor: " + t.id + " -> " + n);
        }
    }

    // Edge list and neighbor lists must describe the same (i,j) pairs.
    std::set<std::pair<std::string, std::string>> edge_pairs;
    for (const auto& e : inst.edges) {
        if (!edge_pairs.insert({e.i, e.j}).second)
            flag("duplicate edge: " + e.i + " -> " + e.j);
        if (e.w < 0.0)
            flag("negative weight: " + e.i + " -> " + e.j);
        if (!online_ids.count(e.i))
            flag("dangling edge (unknown online id): " + e.i);
        if (!offline_ids.count(e.j))
            flag("dangling edge (unknown offline id): " + e.j);
    }
    for (const auto& t : inst.online)
        for (const auto& n : t.neighbors)
            if (offline_ids.count(n) && !edge_pairs.count({t.id, n}))
                flag("neighbor without edge: " + t.id + " -> " + n);
    for (const auto& e : inst.edges) {
        int k = inst.online_index(e.i);
        if (k >= 0) {
            const auto& nb = inst.online[k].neighbors;
            if (std::find(nb.begin(), nb.end(), e.j) == nb.end())
                flag("edge without neighbor entry: " + e.i + " -> " + e.j);
        }
    }
    return rep;
}

class KernelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct KernelOptions {
    double tol = 1e-9;
    // The y_j <= 1 - ln 2 bound is part of the kernel definition; relaxing it
    // admits degenerate instances (e.g. a single saturated first-class edge)
    // for simulation-only use.
    bool enforce_y_bound = true;
};

// Validated kernel instance with index-based adjacency for the engines.
struct KernelInstance {
    Instance inst;
    FractionalSolution x;

    // Per online type: 1 (one neighbor, x = lambda) or 2 (two neighbors, x = lambda/2).
    std::vector<int> klass;
    // Per online type: offline indices of its neighbors (second slot -1 for first-class).
    std::vector<std::array<int, 2>> nbr;
    // Per offline vertex.
    std::vector<double> y;                                   // first-class neighbor rate
    std::vector<std::vector<int>> n1, n2;                    // online type indices
    std::vector<std::vector<std::pair<int, double>>> comp;   // (offline index, c_k)

    int num_types() const { return static_cast<int>(inst.online.size()); }
    int num_offline() const { return static_cast<int>(inst.offline.size()); }

    // Per-edge x_ij: lambda for first-class, lambda/2 for second-class (both slots).
    double edge_x(int type) const {
        const auto& t = inst.online[type];
        return klass[type] == 1 ? t.rate : t.rate / 2.0;
    }
};

inline KernelInstance classify_kernel(const Instance& inst, const FractionalSolution& x,
                                      const KernelOptions& opt = {}) {
    auto v = validate_instance(inst);
    if (!v.ok())
        throw KernelError("invalid instance: " + v.problems.front());

    KernelInstance k;
    k.inst = inst;
    k.x = x;
    const int nt = static_cast<int>(inst.online.size());
    const int noff = static_cast<int>(inst.offline.size());
    k.klass.assign(nt, 0);
    k.nbr.assign(nt, {-1, -1});
    k.y.assign(noff, 0.0);
    k.n1.assign(noff, {});
    k.n2.assign(noff, {});
    k.comp.assign(noff, {});

    std::vector<double> xj(noff, 0.0);
    for (int t = 0; t < nt; ++t) {
        const auto& ot = inst.online[t];
        const auto deg = ot.neighbors.size();
        if (deg == 1) {
            k.klass[t] = 1;
            double xe = x.at(ot.id, ot.neighbors[0]);
            if (std::abs(xe - ot.rate) > opt.tol)
                throw KernelError("x/lambda relation violated (first-class " + ot.id + ")");
            int j = inst.offline_index(ot.neighbors[0]);
            k.nbr[t] = {j, -1};
            k.n1[j].push_back(t);
            k.y[j] += xe;
            xj[j] += xe;
        } else if (deg == 2) {
            k.klass[t] = 2;
            for (int s = 0; s < 2; ++s) {
                double xe = x.at(ot.id, ot.neighbors[s]);
                if (std::abs(xe - ot.rate / 2.0) > opt.tol)
                    throw KernelError("x/lambda relation violated (second-class " + ot.id + ")");
                int j = inst.offline_index(ot.neighbors[s]);
                k.nbr[t][s] = j;
                k.n2[j].push_back(t);
                xj[j] += xe;
            }
        } else {
            throw KernelError("degree must be 1 or 2 (type " + ot.id + ")");
        }
    }

    for (int j = 0; j < noff; ++j) {
        if (std::abs(xj[j] - 1.0) > opt.tol)
            throw KernelError("x_j != 1 (offline " + inst.offline[j] + ")");
        if (opt.enforce_y_bound && k.y[j] > ystar() + opt.tol)
            throw KernelError("y_j > 1 - ln 2 (offline " + inst.offline[j] + ")");
    }

    // Competitors: j' is a competitor of j when they share a second-class type;
    // c_k sums lambda_i/2 over the shared types. Keyed in offline input order.
    for (int j = 0; j < noff; ++j) {
        std::map<int, double> acc;
        for (int t : k.n2[j]) {
            int other = k.nbr[t][0] == j ? k.nbr[t][1] : k.nbr[t][0];
            acc[other] += inst.online[t].rate / 2.0;
        }
        double total = 0.0;
        for (const auto& [jk, ck] : acc) {
            k.comp[j].emplace_back(jk, ck);
            total += ck;
        }
        if (std::abs(total - (1.0 - k.y[j])) > opt.tol)
            throw KernelError("competitor rates do not sum to 1 - y_j (offline " +
                              inst.offline[j] + ")");
    }
    return k;
}

inline std::vector<std::pair<std::string, double>> competitors(const KernelInstance& k,
                                                               const std::string& j_id) {
    int j = k.inst.offline_index(j_id);
    if (j < 0)
        throw std::invalid_argument("unknown offline vertex: " + j_id);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(k.comp[j].size());
    for (const auto& [jk, ck] : k.comp[j])
        out.emplace_back(k.inst.offline[jk], ck);
    return out;
}

}  // namespace stochmatch
