#pragma once

#include <famlies/control.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace famlies::cli {

inline constexpr std::string_view csv_header =
    "op,n,tree,mc,kc,nc,mr,nr,ways,time_s,gflops,max_rel_err";

/// Problems larger than this skip the O(n^3) oracle and leave max_rel_err blank.
inline constexpr index_t oracle_cap = 512;

enum Exit : int { ok = 0, check_failed = 1, usage_error = 2 };

struct SweepRow {
    std::string op;
    index_t n = 0;
    std::string tree;
    index_t mc = 0, kc = 0, nc = 0, mr = 0, nr = 0;
    int ways       = 1;
    double time_s  = 0;
    double gflops  = 0;
    std::optional<double> max_rel_err;
};

std::string to_csv(const SweepRow &row);

struct BenchOptions {
    control::Op op = control::Op::Gemm;
    index_t n = 256, m = -1, k = -1; // m, k default to n
    DType dtype       = DType::F64;
    int repeats       = 3;
    std::uint64_t seed = 42;
};

double flop_count(control::Op op, index_t m, index_t n, index_t k);

/// Times one tree on the seeded workload (median of `repeats`, one warm-up run excluded).
SweepRow bench_tree(const control::ControlNode &tree, const BenchOptions &opts);

/// One row per tree from enumerate_trees, for every entry of ways_list.
std::vector<SweepRow> sweep(const BenchOptions &opts, const std::vector<control::Variant> &variants,
                            const std::vector<index_t> &block_sizes, int depth,
                            const std::vector<int> &ways_list);

/// Copy of the tree with `ways` set on every node.
control::ControlNode with_ways(const control::ControlNode &tree, int ways);

struct SuiteResult {
    std::string name;
    bool passed = true;
    int checks  = 0;
    std::string detail;
};

std::vector<std::string> suite_names();
/// Runs every invariant suite, or those selected by `filter` (a suite or operation name).
/// Throws ConfigError for an unknown filter. FAMLIES_INJECT_FAULT=<suite> forces a failure.
std::vector<SuiteResult> run_suites(const std::optional<std::string> &filter);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace famlies::cli
