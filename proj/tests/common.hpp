#pragma once

// Shared test plumbing: fixture paths, kernel loading, and a tiny subprocess
// runner for the CLI binary.

#include <cstdio>
#include <string>
#include <sys/wait.h>

#include "stochmatch/stochmatch.hpp"

#ifndef STOCHMATCH_FIXTURES_DIR
#define STOCHMATCH_FIXTURES_DIR "fixtures"
#endif

namespace testutil {

inline std::string fixture(const std::string& name) {
    return std::string(STOCHMATCH_FIXTURES_DIR) + "/" + name;
}

inline stochmatch::KernelInstance load_kernel(const std::string& name, bool enforce_y = true) {
    const auto file = stochmatch::load_instance(fixture(name));
    stochmatch::KernelOptions opt;
    opt.enforce_y_bound = enforce_y;
    return stochmatch::classify_kernel(file.inst, file.x, opt);
}

inline stochmatch::PiecewiseConstantF certified_f() {
    return stochmatch::load_activation(fixture("certified.f.json"));
}

struct RunResult {
    int code = -1;
    std::string out;
};

// Run a command line, capture stdout and the exit code. `env` is prepended
// verbatim (e.g. "STOCHMATCH_SEED=9"); stderr goes to the inherited stream.
inline RunResult run_command(const std::string& cmd, const std::string& env = "") {
    const std::string full = (env.empty() ? "" : env + " ") + cmd;
    RunResult res;
    FILE* p = popen(full.c_str(), "r");
    if (!p) return res;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) res.out.append(buf, n);
    const int status = pclose(p);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

}  // namespace testutil
