#pragma once

// File formats and serialization: JSON loaders for instances and activation
// functions, a deterministic JSON writer (17 significant digits, fixed key
// order), FNV-1a content hashes, the run manifest attached to every report,
// and the CSV emitters.
//
// Parsing uses nlohmann::json (vendored); output goes through the local
// writer instead because reports must be byte-identical across runs and
// serialize floats round-trip exactly, neither of which the library's dump()
// guarantees across versions.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arrivals.hpp"
#include "instance.hpp"
#include "montecarlo.hpp"

namespace stochmatch {

inline constexpr const char* kToolVersion = "0.1.0";

// %.17g: enough digits that reading the text back reproduces the exact double.
inline std::string fmt_double(double v) {
    if (!(v == v)) return "null";
    if (v > 1.797693134862315e308 || v < -1.797693134862315e308) return "null";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string content_hash(const std::string& data) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016" PRIx64, fnv1a64(data));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Deterministic JSON emitter: insertion key order, one element per line.
class JsonWriter {
  public:
    void begin_object() {
        separate();
        out_ += '{';
        frames_.push_back(false);
    }
    void end_object() { close('}'); }
    void begin_array() {
        separate();
        out_ += '[';
        frames_.push_back(false);
    }
    void end_array() { close(']'); }

    void key(const std::string& k) {
        separate();
        quote(k);
        out_ += ": ";
        pending_key_ = true;
    }

    void value(double v) { raw(fmt_double(v)); }
    void value(int v) { raw(std::to_string(v)); }
    void value(long v) { raw(std::to_string(v)); }
    void value(std::uint64_t v) { raw(std::to_string(v)); }
    void value(bool v) { raw(v ? "true" : "false"); }
    void value(const std::string& v) {
        separate();
        quote(v);
    }
    void value(const char* v) { value(std::string(v)); }

    const std::string& str() const { return out_; }

  private:
    void raw(const std::string& s) {
        separate();
        out_ += s;
    }

    // Emit the separator a key or value needs in the current frame.
    void separate() {
        if (pending_key_) {
            pending_key_ = false;
            return;
        }
        if (frames_.empty()) return;
        if (frames_.back()) out_ += ',';
        frames_.back() = true;
        out_ += '\n';
        out_.append(2 * frames_.size(), ' ');
    }

    void close(char c) {
        const bool had_content = frames_.back();
        frames_.pop_back();
        if (had_content) {
            out_ += '\n';
            out_.append(2 * frames_.size(), ' ');
        }
        out_ += c;
    }

    void quote(const std::string& s) {
        out_ += '"';
        for (unsigned char c : s) {
            switch (c) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\r': out_ += "\\r"; break;
                case '\t': out_ += "\\t"; break;
                default:
                    if (c < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof buf, "\\u%04x", c);
                        out_ += buf;
                    } else {
                        out_ += static_cast<char>(c);
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> frames_;  // per open scope: wrote an element already
    bool pending_key_ = false;
};

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

struct InstanceFile {
    Instance inst;
    bool has_x = false;
    FractionalSolution x;
};

inline InstanceFile load_instance(const std::string& path) {
    const auto j = parse_json_file(path);
    try {
        InstanceFile out;
        for (const auto& o : j.at("online")) {
            OnlineType t;
            t.id = o.at("id").get<std::string>();
            t.rate = o.at("rate").get<double>();
            for (const auto& n : o.at("neighbors")) t.neighbors.push_back(n.get<std::string>());
            out.inst.online.push_back(std::move(t));
        }
        for (const auto& s : j.at("offline")) out.inst.offline.push_back(s.get<std::string>());
        for (const auto& e : j.at("weights")) {
            out.inst.edges.push_back({e.at("i").get<std::string>(), e.at("j").get<std::string>(),
                                      e.at("w").get<double>()});
        }
        if (j.contains("x")) {
            out.has_x = true;
            for (const auto& e : j.at("x")) {
                out.x.x[{e.at("i").get<std::string>(), e.at("j").get<std::string>()}] =
                    e.at("x").get<double>();
            }
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline PiecewiseConstantF load_activation(const std::string& path) {
    const auto j = parse_json_file(path);
    try {
        const int m = j.at("m").get<int>();
        std::vector<double> values;
        for (const auto& v : j.at("values")) values.push_back(v.get<double>());
        if (m != static_cast<int>(values.size()))
            throw std::runtime_error(path + ": m does not match values length");
        return PiecewiseConstantF(values);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_activation(const std::string& path, const PiecewiseConstantF& f) {
    JsonWriter w;
    w.begin_object();
    w.key("m");
    w.value(f.m());
    w.key("values");
    w.begin_array();
    for (double v : f.values()) w.value(v);
    w.end_array();
    w.end_object();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << w.str() << '\n';
}

struct RunManifest {
    std::string command;
    std::vector<std::string> arguments;
    std::uint64_t seed = 0;
    std::string version = kToolVersion;
    std::vector<std::pair<std::string, std::string>> inputs;  // (path, content hash)
    double wall_seconds = 0.0;
};

inline void manifest_input(RunManifest& m, const std::string& path) {
    m.inputs.emplace_back(path, content_hash(read_file(path)));
}

inline void write_manifest(JsonWriter& w, const RunManifest& m) {
    w.key("manifest");
    w.begin_object();
    w.key("command");
    w.value(m.command);
    w.key("arguments");
    w.begin_array();
    for (const auto& a : m.arguments) w.value(a);
    w.end_array();
    w.key("seed");
    w.value(m.seed);
    w.key("version");
    w.value(m.version);
    w.key("inputs");
    w.begin_object();
    for (const auto& [path, hash] : m.inputs) {
        w.key(path);
        w.value(hash);
    }
    w.end_object();
    w.key("wall_seconds");
    w.value(m.wall_seconds);
    w.end_object();
}

// RFC 4180 quoting, applied only when the field needs it.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

// Per-vertex unmatched-probability curves, one block per offline vertex.
inline void write_curves_csv(std::ostream& os, const KernelInstance& k,
                             const EstimateReport& rep) {
    os << "t,j,phat,se\n";
    for (int j = 0; j < k.num_offline(); ++j)
        for (size_t g = 0; g < rep.grid.size(); ++g)
            os << fmt_double(rep.grid[g]) << ',' << csv_field(k.inst.offline[j]) << ','
               << fmt_double(rep.phat_unmatched(j, static_cast<int>(g))) << ','
               << fmt_double(rep.se_unmatched(j, static_cast<int>(g))) << '\n';
}

inline void write_edges_csv(std::ostream& os, const KernelInstance& k,
                            const EstimateReport& rep) {
    os << "i,j,x,phat,se,ratio\n";
    for (const auto& e : rep.edges)
        os << csv_field(k.inst.online[e.type].id) << ',' << csv_field(k.inst.offline[e.offline])
           << ',' << fmt_double(e.x) << ',' << fmt_double(e.phat) << ',' << fmt_double(e.se)
           << ',' << fmt_double(e.x > 0.0 ? e.phat / e.x : 0.0) << '\n';
}

// Event log of one trial. The designation column shows the proposal targets
// "first|second" with '-' for none; first-class arrivals always target their
// unique neighbor.
inline void write_arrivals_csv(std::ostream& os, const KernelInstance& k,
                               const PiecewiseConstantF& f,
                               const std::vector<ArrivalEvent>& events) {
    os << "t,type,u,r1,r2,designation\n";
    for (const auto& e : events) {
        std::string des;
        if (k.klass[e.type] == 1) {
            des = k.inst.offline[k.nbr[e.type][0]] + "|-";
        } else {
            const Designation d = designate(e, k, f);
            des = (d.j1 < 0 ? std::string("-") : k.inst.offline[d.j1]) + "|" +
                  (d.j2 < 0 ? std::string("-") : k.inst.offline[d.j2]);
        }
        os << fmt_double(e.t) << ',' << csv_field(k.inst.online[e.type].id) << ','
           << fmt_double(e.u01) << ',' << fmt_double(e.r1) << ',' << fmt_double(e.r2) << ','
           << csv_field(des) << '\n';
    }
}

}  // namespace stochmatch
