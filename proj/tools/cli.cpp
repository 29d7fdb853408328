#include "cli.hpp"

#include "properties.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace famlies::cli {

using control::Op;
using control::Variant;

namespace {

constexpr std::uint64_t check_seed = 20240611;

struct Suite {
    const char *name;
    std::function<props::Outcome()> run;
};

const std::vector<Suite> &suites() {
    static const std::vector<Suite> all = {
        {"views",
         [] {
             props::Outcome o = props::partition_coverage(24, 8);
             o.merge(props::view_algebra(6));
             return o;
         }},
        {"engine",
         [] {
             props::Outcome o = props::gemm_oracle(40, 48, check_seed);
             o.merge(props::gemm_determinism(160, {1, 2, 4}, check_seed));
             o.merge(props::gemmt_canary(30, check_seed));
             o.merge(props::sandwich_fusion(30, check_seed));
             return o;
         }},
        {"control", [] { return props::control_trees(); }},
        {"cholesky",
         [] {
             props::Outcome o = props::cholesky_family({40, 90}, {1, 7, 32}, check_seed);
             o.merge(props::cholesky_upper({60}, check_seed));
             return o;
         }},
        {"lu", [] { return props::lu_family({40, 90}, {1, 8, 32}, check_seed); }},
        {"qr", [] { return props::qr_family(90, 60, {1, 16, 60}, check_seed); }},
        {"ltlt",
         [] {
             props::Outcome o = props::ltlt_reconstruction({10, 48}, {1, 5, 16}, check_seed);
             o.merge(props::pfaffian_vs_matchings(40, check_seed));
             o.merge(props::pfaffian_vs_determinant({20}, check_seed));
             o.merge(props::pfaffian_permutation(8, check_seed));
             return o;
         }},
        {"tensor",
         [] {
             props::Outcome o = props::contraction(40, check_seed);
             o.merge(props::scatter_exhaustive(3));
             return o;
         }},
    };
    return all;
}

std::string suite_for(const std::string &filter) {
    if (filter == "gemm")
        return "engine";
    if (filter == "pfaffian")
        return "ltlt";
    for (const Suite &s : suites())
        if (filter == s.name)
            return filter;
    std::string names;
    for (const std::string &n : suite_names())
        names += " " + n;
    throw ConfigError("unknown check filter '" + filter + "'; expected one of:" + names +
                      " gemm pfaffian");
}

std::vector<Variant> parse_variants(Op op, const std::vector<std::string> &items) {
    std::vector<Variant> out;
    if (items.empty()) {
        if (op == Op::Cholesky)
            return {Variant::blocked_v(1), Variant::blocked_v(2), Variant::blocked_v(3)};
        return {Variant::blocked_v()};
    }
    for (const std::string &s : items) {
        if (s == "blocked") {
            out.push_back(Variant::blocked_v());
            continue;
        }
        int v = 0;
        std::istringstream is(s);
        if (!(is >> v) || !is.eof())
            throw ConfigError("bad variant '" + s + "'");
        out.push_back(Variant::blocked_v(v));
    }
    return out;
}

BenchOptions options_from(const std::string &op_name, index_t n, index_t m, index_t k,
                          const std::string &dtype, int repeats, std::uint64_t seed) {
    BenchOptions o;
    auto op = control::parse_op(op_name);
    if (!op)
        throw ConfigError("unknown --op '" + op_name + "'; expected gemm, cholesky, lu, qr or ltlt");
    o.op      = *op;
    o.n       = n;
    o.m       = m;
    o.k       = k;
    o.dtype   = parse_dtype(dtype);
    o.repeats = repeats;
    o.seed    = seed;
    return o;
}

void write_rows(std::ostream &os, const std::vector<SweepRow> &rows) {
    os << csv_header << '\n';
    for (const SweepRow &r : rows)
        os << to_csv(r) << '\n';
}

} // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> names;
    for (const Suite &s : suites())
        names.emplace_back(s.name);
    return names;
}

std::vector<SuiteResult> run_suites(const std::optional<std::string> &filter) {
    const std::string only = filter ? suite_for(*filter) : std::string();
    const char *env        = std::getenv("FAMLIES_INJECT_FAULT");
    const std::string fault = env ? env : "";
    std::vector<SuiteResult> results;
    for (const Suite &s : suites()) {
        if (!only.empty() && only != s.name)
            continue;
        SuiteResult r;
        r.name = s.name;
        try {
            props::Outcome o = s.run();
            r.passed         = o.ok();
            r.checks         = o.cases;
            r.detail         = o.summary();
            for (const std::string &m : o.messages)
                r.detail += "\n    " + m;
        } catch (const std::exception &e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        if (fault == s.name) {
            r.passed = false;
            r.detail += "\n    injected fault";
        }
        results.push_back(std::move(r));
    }
    return results;
}

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Dense linear and multilinear algebra: checks, benchmarks and sweeps", "famlies"};
    app.require_subcommand(1);

    std::optional<std::string> filter;
    CLI::App *check = app.add_subcommand("check", "Run the invariant suites");
    check->add_option("filter", filter, "Suite or operation name");

    std::string op = "gemm", dtype = "f64", tree_file, out_file;
    index_t n = 256, m = -1, k = -1;
    int ways = 1, repeats = 3, depth = 1;
    std::uint64_t seed = 42;
    std::vector<std::string> variants;
    std::vector<index_t> bss;
    std::vector<int> ways_list = {1};

    auto common = [&](CLI::App *sub) {
        sub->add_option("--op", op, "gemm, cholesky, lu, qr or ltlt")->required();
        sub->add_option("--n", n, "Problem size")->capture_default_str();
        sub->add_option("--m", m, "Rows (gemm, lu, qr); defaults to n");
        sub->add_option("--k", k, "Inner dimension (gemm); defaults to n");
        sub->add_option("--dtype", dtype, "f32 or f64")->capture_default_str();
        sub->add_option("--repeats", repeats, "Timed runs (median reported)")->capture_default_str();
        sub->add_option("--seed", seed, "Operand seed")->capture_default_str();
    };

    CLI::App *bench = app.add_subcommand("bench", "Time one control tree and print a CSV row");
    common(bench);
    bench->add_option("--tree", tree_file, "Control tree JSON file (default tree otherwise)");
    CLI::Option *ways_opt = bench->add_option("--ways", ways, "Workers for every level");

    CLI::App *sw = app.add_subcommand("sweep", "Time every enumerated control tree");
    common(sw);
    sw->add_option("--variants", variants, "Blocked variants (1,2,3 or blocked)")->delimiter(',');
    sw->add_option("--bs", bss, "Block sizes (kc values for gemm)")->delimiter(',');
    sw->add_option("--depth", depth, "Blocked levels")->capture_default_str();
    sw->add_option("--ways", ways_list, "Worker counts")->delimiter(',');
    sw->add_option("--out", out_file, "CSV file (standard output otherwise)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Exit::ok : Exit::usage_error;
    }

    try {
        if (*check) {
            std::vector<SuiteResult> results = run_suites(filter);
            int failed = 0;
            for (const SuiteResult &r : results) {
                out << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
                failed += r.passed ? 0 : 1;
            }
            out << results.size() - std::size_t(failed) << "/" << results.size()
                << " suites passed\n";
            return failed ? Exit::check_failed : Exit::ok;
        }

        const BenchOptions opts = options_from(op, n, m, k, dtype, repeats, seed);
        if (*bench) {
            control::ControlNode tree;
            if (tree_file.empty()) {
                tree = control::default_tree(opts.op, n, opts.dtype);
            } else {
                std::ifstream in(tree_file);
                if (!in) {
                    err << "error: cannot read tree file " << tree_file << '\n';
                    return Exit::usage_error;
                }
                std::stringstream text;
                text << in.rdbuf();
                tree = control::parse_tree(text.str());
            }
            if (*ways_opt)
                tree = with_ways(tree, ways);
            write_rows(out, {bench_tree(tree, opts)});
            return Exit::ok;
        }

        if (bss.empty())
            bss = opts.op == Op::Gemm ? std::vector<index_t>{128, 256}
                                      : std::vector<index_t>{64, 128};
        std::ofstream file;
        if (!out_file.empty()) {
            file.open(out_file);
            if (!file) {
                err << "error: cannot write " << out_file << '\n';
                return Exit::usage_error;
            }
        }
        const auto rows = sweep(opts, parse_variants(opts.op, variants), bss, depth, ways_list);
        if (file.is_open()) {
            write_rows(file, rows);
            file.close();
            if (!file) {
                err << "error: failed writing " << out_file << '\n';
                return Exit::usage_error;
            }
        } else {
            write_rows(out, rows);
        }
        return Exit::ok;
    } catch (const control::InvalidControlTree &e) {
        err << "error: invalid control tree\n";
        for (const control::Diagnostic &d : e.diagnostics())
            err << "  " << (d.path.empty() ? "/" : d.path) << ": " << d.message << '\n';
        return Exit::usage_error;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return Exit::usage_error;
    }
}

} // namespace famlies::cli
