#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

using namespace stochmatch;

namespace {

const std::string kCli = STOCHMATCH_CLI_PATH;

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

// Drop lines containing the wall-clock entry, the only nondeterministic bytes.
std::string strip_wall(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("wall_seconds") == std::string::npos) out += line + "\n";
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> out;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("doubles are formatted round-trip exact") {
    const double values[] = {0.0,    0.5,      0.1,   1.0 / 3.0, ystar(), 1e-300,
                             -2.5e17, 4097.25, 5e-324, 1.24,     -0.75};
    for (double v : values) {
        const std::string s = fmt_double(v);
        REQUIRE(std::strtod(s.c_str(), nullptr) == v);
    }
    REQUIRE(fmt_double(0.5) == "0.5");
    REQUIRE(fmt_double(0.1) == "0.10000000000000001");
    REQUIRE(fmt_double(std::nan("")) == "null");
    REQUIRE(fmt_double(std::numeric_limits<double>::infinity()) == "null");
    REQUIRE(fmt_double(-std::numeric_limits<double>::infinity()) == "null");
}

TEST_CASE("content hashing matches the reference vectors") {
    REQUIRE(fnv1a64("") == 0xcbf29ce484222325ULL);
    REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    REQUIRE(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    REQUIRE(content_hash("") == "fnv1a:cbf29ce484222325");
    REQUIRE(content_hash("foobar") == "fnv1a:85944171f73967e8");
}

TEST_CASE("JSON writer golden output") {
    JsonWriter w;
    w.begin_object();
    w.key("a");
    w.value(1);
    w.key("b");
    w.begin_array();
    w.value(true);
    w.value("x\"y\n");
    w.end_array();
    w.key("c");
    w.begin_object();
    w.end_object();
    w.end_object();
    REQUIRE(w.str() == R"({
  "a": 1,
  "b": [
    true,
    "x\"y\n"
  ],
  "c": {}
})");
}

TEST_CASE("JSON string escaping") {
    JsonWriter w;
    w.begin_array();
    w.value(std::string("tab\there"));
    w.value(std::string("back\\slash"));
    w.value(std::string("bell\x01"));
    w.end_array();
    const std::string s = w.str();
    REQUIRE(s.find("\"tab\\there\"") != std::string::npos);
    REQUIRE(s.find("\"back\\\\slash\"") != std::string::npos);
    REQUIRE(s.find("\"bell\\u0001\"") != std::string::npos);
    REQUIRE(nlohmann::json::parse(s).size() == 3);
}

TEST_CASE("manifest serialization") {
    RunManifest man;
    man.command = "x";
    man.arguments = {"a", "b"};
    man.seed = 7;
    man.inputs = {{"p", "h"}};
    man.wall_seconds = 0.25;
    JsonWriter w;
    w.begin_object();
    write_manifest(w, man);
    w.end_object();
    REQUIRE(w.str() == R"({
  "manifest": {
    "command": "x",
    "arguments": [
      "a",
      "b"
    ],
    "seed": 7,
    "version": "0.1.0",
    "inputs": {
      "p": "h"
    },
    "wall_seconds": 0.25
  }
})");
}

TEST_CASE("CSV field quoting") {
    REQUIRE(csv_field("plain") == "plain");
    REQUIRE(csv_field("a,b") == "\"a,b\"");
    REQUIRE(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    REQUIRE(csv_field("line\nbreak") == "\"line\nbreak\"");
}

TEST_CASE("loader error paths") {
    REQUIRE_THROWS_AS(load_instance("/nonexistent/nowhere.json"), std::runtime_error);
    REQUIRE_THROWS_AS(load_activation("/nonexistent/nowhere.json"), std::runtime_error);

    const auto bad = write_temp("stochmatch_bad.json", "{not json");
    REQUIRE_THROWS_AS(load_instance(bad), std::runtime_error);

    const auto missing_key = write_temp("stochmatch_nokey.json", R"({"online": []})");
    REQUIRE_THROWS_AS(load_instance(missing_key), std::runtime_error);

    const auto mism = write_temp("stochmatch_mism.f.json", R"({"m": 4, "values": [1.0, 2.0]})");
    REQUIRE_THROWS_AS(load_activation(mism), std::runtime_error);

    const auto dec = write_temp("stochmatch_dec.f.json", R"({"m": 2, "values": [1.0, 0.5]})");
    REQUIRE_THROWS_AS(load_activation(dec), std::invalid_argument);
}

TEST_CASE("activation save/load round trip") {
    const auto f = testutil::certified_f();
    const std::string path = "/tmp/stochmatch_roundtrip.f.json";
    save_activation(path, f);
    const auto g = load_activation(path);
    REQUIRE(f.values() == g.values());
    REQUIRE(f.m() == g.m());
}

TEST_CASE("cli: ratio eval reports and certifies") {
    const auto run = testutil::run_command(kCli + " ratio eval --f " +
                                           testutil::fixture("certified.f.json"));
    REQUIRE(run.code == 0);
    const auto j = nlohmann::json::parse(run.out);
    REQUIRE(j["report"]["certified"].get<bool>());
    REQUIRE(j["report"]["min_ratio"].get<double>() >= 0.6503);
    REQUIRE(j["report"]["cons1"].get<double>() <= 0.0);
    REQUIRE(j["report"]["cons2"].get<double>() <= 0.0);
    REQUIRE(j["f"]["m"].get<int>() == 40);
    REQUIRE(j["manifest"]["command"].get<std::string>() == "ratio eval");
    REQUIRE(j["manifest"]["seed"].get<std::uint64_t>() == 42);
    REQUIRE(j["manifest"]["version"].get<std::string>() == kToolVersion);
    // The input hash is recorded under the file's path.
    const auto& inputs = j["manifest"]["inputs"];
    REQUIRE(inputs.size() == 1);
    for (const auto& [path, hash] : inputs.items()) {
        REQUIRE(path.find("certified.f.json") != std::string::npos);
        REQUIRE(hash.get<std::string>().rfind("fnv1a:", 0) == 0);
    }
}

TEST_CASE("cli: reports are byte-identical across reruns") {
    const std::string cmd =
        kCli + " ratio eval --f " + testutil::fixture("certified.f.json");
    const auto a = testutil::run_command(cmd);
    const auto b = testutil::run_command(cmd);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    REQUIRE(strip_wall(a.out) == strip_wall(b.out));
    REQUIRE(a.out.find("wall_seconds") != std::string::npos);
}

TEST_CASE("cli: seed precedence") {
    const std::string base = kCli + " simulate " + testutil::fixture("twin.json") +
                             " --engine sm --trials 20 --grid 3 --threads 1";
    auto seed_of = [](const testutil::RunResult& r) {
        return nlohmann::json::parse(r.out)["manifest"]["seed"].get<std::uint64_t>();
    };

    const auto flag_and_env = testutil::run_command(base + " --seed 7", "STOCHMATCH_SEED=9");
    REQUIRE(flag_and_env.code == 0);
    REQUIRE(seed_of(flag_and_env) == 7);

    const auto env_only = testutil::run_command(base, "STOCHMATCH_SEED=9");
    REQUIRE(env_only.code == 0);
    REQUIRE(seed_of(env_only) == 9);

    const auto neither = testutil::run_command(base);
    REQUIRE(neither.code == 0);
    REQUIRE(seed_of(neither) == 42);

    const auto bad_env = testutil::run_command(base, "STOCHMATCH_SEED=abc");
    REQUIRE(bad_env.code == 1);
}

TEST_CASE("cli: exit codes") {
    const std::string twin = testutil::fixture("twin.json");

    SECTION("usage errors exit 2") {
        REQUIRE(testutil::run_command(kCli + " ratio eval --bogus 2>/dev/null").code == 2);
        REQUIRE(testutil::run_command(kCli + " simulate " + twin +
                                      " --engine nope --trials 5 2>/dev/null")
                    .code == 2);
        REQUIRE(testutil::run_command(kCli + " simulate " + twin +
                                      " --engine sm --trials 0 2>/dev/null")
                    .code == 2);
        REQUIRE(testutil::run_command(kCli + " 2>/dev/null").code == 2);
    }
    SECTION("runtime failures exit 1") {
        REQUIRE(testutil::run_command(kCli + " ratio eval --f /no/such.json 2>/dev/null")
                    .code == 1);
        REQUIRE(testutil::run_command(kCli + " simulate " + twin +
                                      " --engine esm --trials 5 2>/dev/null")
                    .code == 1);  // esm without --f
        const auto no_x = write_temp("stochmatch_nox.json", R"({
  "online": [{"id": "i", "rate": 1.0, "neighbors": ["j"]}],
  "offline": ["j"],
  "weights": [{"i": "i", "j": "j", "w": 1.0}]
})");
        REQUIRE(testutil::run_command(kCli + " lp check " + no_x + " 2>/dev/null").code == 1);
    }
    SECTION("kernel bound enforcement") {
        const std::string single = testutil::fixture("single_edge.json");
        REQUIRE(testutil::run_command(kCli + " kernel check " + single + " 2>/dev/null")
                    .code == 1);
        const auto relaxed =
            testutil::run_command(kCli + " kernel check " + single + " --relax-y");
        REQUIRE(relaxed.code == 0);
        const auto j = nlohmann::json::parse(relaxed.out);
        REQUIRE(j["ok"].get<bool>());
        REQUIRE(j["offline"][0]["y"].get<double>() == 1.0);
        REQUIRE(j["offline"][0]["competitors"].empty());
    }
    SECTION("successful checks exit 0") {
        const auto lp = testutil::run_command(kCli + " lp check " + twin);
        REQUIRE(lp.code == 0);
        REQUIRE(nlohmann::json::parse(lp.out)["ok"].get<bool>());
        const auto k = testutil::run_command(kCli + " kernel check " + twin);
        REQUIRE(k.code == 0);
        const auto j = nlohmann::json::parse(k.out);
        REQUIRE(j["ystar"].get<double>() == Catch::Approx(ystar()).margin(1e-15));
        REQUIRE(j["types"].size() == 3);
    }
}

TEST_CASE("cli: lp solve on the single edge") {
    const auto run = testutil::run_command(kCli + " lp solve " +
                                           testutil::fixture("single_edge.json"));
    REQUIRE(run.code == 0);
    const auto j = nlohmann::json::parse(run.out);
    const double expect = (2.0 - std::log(2.0)) / 2.0;
    REQUIRE(j["objective"].get<double>() == Catch::Approx(expect).margin(1e-9));
    REQUIRE(j["x"].size() == 1);
    REQUIRE(j["x"][0]["x"].get<double>() == Catch::Approx(expect).margin(1e-9));
}

TEST_CASE("cli: simulate report shape") {
    const std::string out_curves = "/tmp/stochmatch_curves.csv";
    const std::string out_edges = "/tmp/stochmatch_edges.csv";
    const std::string dump = "/tmp/stochmatch_arrivals.csv";
    const auto run = testutil::run_command(
        kCli + " simulate " + testutil::fixture("twin.json") + " --engine esm --f " +
        testutil::fixture("certified.f.json") +
        " --trials 200 --seed 5 --grid 11 --threads 1 --joint j,jp --out-curves " + out_curves +
        " --out-edges " + out_edges + " --dump-arrivals " + dump);
    REQUIRE(run.code == 0);
    const auto j = nlohmann::json::parse(run.out);
    REQUIRE(j["engine"].get<std::string>() == "esm");
    REQUIRE(j["trials"].get<long>() == 200);
    REQUIRE(j["seed"].get<std::uint64_t>() == 5);
    REQUIRE(j["edges"].size() == 4);
    for (const auto& e : j["edges"]) {
        REQUIRE(e["count"].get<long>() >= 0);
        REQUIRE(e["phat"].get<double>() >= 0.0);
        REQUIRE(e["phat"].get<double>() <= 1.0);
    }
    REQUIRE(j["ratio"]["alpha"].get<double>() > 0.3);
    REQUIRE(j["grid"].size() == 11);
    REQUIRE(j["unmatched"]["j"].size() == 11);
    REQUIRE(j["unmatched"]["jp"][0].get<double>() == 1.0);
    REQUIRE(j["joint"].size() == 1);
    REQUIRE(j["joint"][0]["phat"].size() == 11);

    const auto curves = lines_of(read_file(out_curves));
    REQUIRE(curves[0] == "t,j,phat,se");
    REQUIRE(curves.size() == 1 + 2 * 11);
    const auto edges = lines_of(read_file(out_edges));
    REQUIRE(edges[0] == "i,j,x,phat,se,ratio");
    REQUIRE(edges.size() == 1 + 4);
    const auto arrivals = lines_of(read_file(dump));
    REQUIRE(arrivals[0] == "t,type,u,r1,r2,designation");
    REQUIRE(arrivals.size() >= 1);
}

TEST_CASE("cli: simulate runs are mergeable and deterministic") {
    const std::string base = kCli + " simulate " + testutil::fixture("twin.json") +
                             " --engine esm --f " + testutil::fixture("certified.f.json") +
                             " --grid 5 --threads 1 --seed 11";
    const auto full = testutil::run_command(base + " --trials 400");
    const auto lo = testutil::run_command(base + " --trials 200");
    const auto hi = testutil::run_command(base + " --trials 200 --trial-offset 200");
    REQUIRE(full.code == 0);
    const auto jf = nlohmann::json::parse(full.out);
    const auto jl = nlohmann::json::parse(lo.out);
    const auto jh = nlohmann::json::parse(hi.out);
    for (size_t e = 0; e < 4; ++e)
        REQUIRE(jf["edges"][e]["count"].get<long>() ==
                jl["edges"][e]["count"].get<long>() + jh["edges"][e]["count"].get<long>());

    const auto again = testutil::run_command(base + " --trials 400");
    REQUIRE(strip_wall(full.out) == strip_wall(again.out));
}

TEST_CASE("cli: ratio curve output") {
    const std::string base =
        kCli + " ratio curve --f " + testutil::fixture("one.f.json") + " --grid 8";

    const auto direct = testutil::run_command(base);
    REQUIRE(direct.code == 0);
    const auto rows = lines_of(direct.out);
    REQUIRE(rows[0] == "y,r1,r2");
    REQUIRE(rows.size() == 1 + 8);
    // f = 1 gives the one-shot baseline at every y.
    const auto fields = rows[4];
    const auto c1 = fields.find(','), c2 = fields.find(',', c1 + 1);
    const double r1v = std::strtod(fields.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
    const double r2v = std::strtod(fields.substr(c2 + 1).c_str(), nullptr);
    REQUIRE(r1v == Catch::Approx(1.0 - std::exp(-1.0)).margin(1e-9));
    REQUIRE(r2v == Catch::Approx(r1v).margin(1e-12));

    const std::string csv_path = "/tmp/stochmatch_curve.csv";
    const auto filed = testutil::run_command(base + " --out " + csv_path);
    REQUIRE(filed.code == 0);
    const auto j = nlohmann::json::parse(filed.out);
    REQUIRE(j["csv"].get<std::string>() == csv_path);
    REQUIRE(j["points"].get<int>() == 8);
    REQUIRE(lines_of(read_file(csv_path)).size() == 1 + 8);

    // The top-level alias produces the same CSV.
    const auto alias = testutil::run_command(kCli + " curve --f " +
                                             testutil::fixture("one.f.json") + " --grid 8");
    REQUIRE(alias.code == 0);
    REQUIRE(alias.out == direct.out);
}

TEST_CASE("cli: search finds a certified function on a small problem") {
    const std::string out = "/tmp/stochmatch_search.f.json";
    const auto run = testutil::run_command(
        kCli +
        " search --m 6 --restarts 2 --seed 3 --max-iters 60 --ils-cycles 2 --threads 1 --out " +
        out);
    REQUIRE(run.code == 0);
    const auto j = nlohmann::json::parse(run.out);
    REQUIRE(j["feasible_found"].get<bool>());
    REQUIRE(j["objective"].get<double>() >= 0.62);
    REQUIRE(j["report"]["certified"].get<bool>());
    REQUIRE(j["restart_objectives"].size() == 2);
    REQUIRE(j["out"].get<std::string>() == out);

    // The saved function reloads and re-certifies to the same value.
    const auto f = load_activation(out);
    const auto rep = check_all(f);
    REQUIRE(rep.certified);
    REQUIRE(rep.certified_ratio == Catch::Approx(j["objective"].get<double>()).margin(1e-12));
}

TEST_CASE("cli: version flag") {
    const auto run = testutil::run_command(kCli + " --version");
    REQUIRE(run.code == 0);
    REQUIRE(run.out == std::string(kToolVersion) + "\n");
}
