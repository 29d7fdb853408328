// Acceptance runner: one PASS/FAIL line per criterion. Optional arguments select criteria by
// number.

#include <cli.hpp>
#include <properties.hpp>

#include <famlies/engine.hpp>
#include <famlies/factor.hpp>
#include <famlies/oracle.hpp>
#include <famlies/random.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace famlies;
using control::ControlNode;
using control::Op;
using control::Variant;
using props::Outcome;

namespace {

constexpr std::uint64_t seed = 7;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
double time_once(F &&f) {
    const auto t0 = Clock::now();
    f();
    return seconds_since(t0);
}

template <class F>
double median_time(int repeats, F &&f) {
    std::vector<double> t;
    for (int r = 0; r < repeats; ++r)
        t.push_back(time_once(f));
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
}

Outcome performance() {
    Outcome out;
    const index_t n   = 1024;
    MatrixView a      = random::uniform_matrix(n, n, DType::F64, seed);
    MatrixView b      = random::uniform_matrix(n, n, DType::F64, seed + 1);
    MatrixView c      = make_view(n, n, DType::F64);
    MatrixView ref    = make_view(n, n, DType::F64);
    const auto cfg    = engine::KernelConfig::defaults(DType::F64);
    engine::gemm(1.0, a, b, 0.0, c, cfg); // warm-up
    const double fast = median_time(3, [&] { engine::gemm(1.0, a, b, 0.0, c, cfg, 1); });
    const double slow = time_once([&] { oracle::gemm_naive(1.0, a, b, 0.0, ref); });
    char buf[160];
    std::snprintf(buf, sizeof buf, "gemm speedup %.1fx (blocked %.3f s, naive %.3f s)",
                  slow / fast, fast, slow);
    std::printf("    %s\n", buf);
    out.expect(slow >= 10.0 * fast, buf);

    MatrixView spd = random::spd_matrix(n, DType::F64, seed);
    ControlNode leaf{Op::Cholesky, Variant::unblocked_v(3)};
    ControlNode blocked{Op::Cholesky, Variant::blocked_v(3)};
    blocked.bs    = 128;
    blocked.child = std::make_shared<const ControlNode>(leaf);
    auto chol = [&](const ControlNode &tree) {
        MatrixView w = copy_of(spd);
        return time_once([&] { factor::cholesky(w, factor::Uplo::Lower, tree); });
    };
    chol(blocked);
    const double tb = std::min(chol(blocked), chol(blocked));
    const double tu = chol(leaf);
    std::snprintf(buf, sizeof buf, "cholesky speedup %.1fx (bs=128 %.3f s, unblocked %.3f s)",
                  tu / tb, tb, tu);
    std::printf("    %s\n", buf);
    out.expect(tu >= 3.0 * tb, buf);
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path &p, bool &trailing_newline) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    trailing_newline       = !text.empty() && text.back() == '\n';
    std::vector<std::string> lines;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);)
        lines.push_back(line);
    return lines;
}

std::string last_field(const std::string &line) { return line.substr(line.rfind(',') + 1); }

Outcome cli_sweep() {
    Outcome out;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("famlies_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    auto sweep = [&](const std::string &file, std::vector<std::string> args) {
        args.insert(args.begin(), {"famlies", "sweep"});
        args.push_back("--out");
        args.push_back((dir / file).string());
        std::vector<const char *> argv;
        for (const std::string &s : args)
            argv.push_back(s.c_str());
        std::ostringstream o, e;
        const int code = cli::run(int(argv.size()), argv.data(), o, e);
        out.expect(code == 0, "sweep exited with " + std::to_string(code) + ": " + e.str());
        bool nl = false;
        auto lines = read_lines(dir / file, nl);
        out.expect(nl, file + " does not end with a newline");
        return lines;
    };

    const std::vector<std::string> chol = {"--op", "cholesky", "--n", "300", "--variants",
                                           "1,2,3", "--bs", "64,128", "--depth", "1", "--ways",
                                           "1", "--seed", "42"};
    auto first  = sweep("chol1.csv", chol);
    auto second = sweep("chol2.csv", chol);
    out.expect(!first.empty() && first.front() == cli::csv_header, "header mismatch");
    out.expect(first.size() == 19, "cholesky sweep has " + std::to_string(first.size()) +
                                       " lines, expected 18 rows + header");
    bool same = first.size() == second.size();
    for (std::size_t i = 1; same && i < first.size(); ++i)
        same = last_field(first[i]) == last_field(second[i]) && !last_field(first[i]).empty();
    out.expect(same, "max_rel_err differs between identical sweeps");
    for (std::size_t i = 1; i < first.size(); ++i)
        out.within(std::stod(last_field(first[i])), 10.0 * 300 * eps(DType::F64),
                   "row " + std::to_string(i) + " residual");

    auto ways = sweep("ways.csv", {"--op", "lu", "--n", "96", "--bs", "16,32", "--ways", "1,2,4"});
    out.expect(ways.size() == 1 + 2 * 3, "lu sweep over 2 trees x 3 ways has " +
                                             std::to_string(ways.size() - 1) + " rows");
    auto kc = sweep("gemm.csv", {"--op", "gemm", "--n", "200", "--bs", "128,256"});
    out.expect(kc.size() == 3, "gemm kc sweep has " + std::to_string(kc.size() - 1) + " rows");
    for (std::size_t i = 1; i < kc.size(); ++i)
        out.expect(kc[i].find(i == 1 ? ",128," : ",256,") != std::string::npos,
                   "gemm sweep row does not report its kc: " + kc[i]);
    std::filesystem::remove_all(dir);
    return out;
}

struct Criterion {
    int id;
    const char *name;
    double limit_s;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char **argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));

    const std::vector<Criterion> criteria = {
        {1, "gemm oracle equivalence", 30, [] { return props::gemm_oracle(200, 64, seed); }},
        {2, "gemm determinism across ways", 10,
         [] { return props::gemm_determinism(512, {1, 2, 4}, seed); }},
        {3, "cholesky family", 60,
         [] { return props::cholesky_family({50, 100, 200}, {1, 7, 32, 128}, seed); }},
        {4, "upper cholesky via stride swap", 5,
         [] { return props::cholesky_upper({50, 100, 200}, seed); }},
        {5, "lu and solve", 30, [] { return props::lu_family({60, 120}, {1, 8, 32}, seed); }},
        {6, "householder qr", 30, [] { return props::qr_family(120, 80, {1, 16, 80}, seed); }},
        {7, "ltlt and pfaffian", 60,
         [] {
             Outcome o = props::ltlt_reconstruction({10, 64}, {1, 8, 32}, seed);
             o.merge(props::pfaffian_vs_matchings(100, seed));
             o.merge(props::pfaffian_vs_determinant({20, 40}, seed));
             o.merge(props::pfaffian_permutation(8, seed));
             return o;
         }},
        {8, "fused sandwich product", 20, [] { return props::sandwich_fusion(60, seed); }},
        {9, "tensor contraction", 60,
         [] {
             Outcome o = props::contraction(100, seed);
             o.merge(props::scatter_exhaustive(4));
             return o;
         }},
        {10, "performance sanity", 120, performance},
        {11, "cli sweep", 60, cli_sweep},
    };

    int failures = 0;
    for (const Criterion &c : criteria) {
        if (!only.empty() && !only.count(c.id))
            continue;
        const auto t0 = Clock::now();
        Outcome o;
        std::string error;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            error = e.what();
        }
        const double t  = seconds_since(t0);
        const bool pass = error.empty() && o.ok() && t < c.limit_s;
        failures += pass ? 0 : 1;
        std::printf("[%s] %d %s (%.2f s, limit %.0f s) %s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    t, c.limit_s, o.summary().c_str());
        if (!error.empty())
            std::printf("    exception: %s\n", error.c_str());
        for (const std::string &m : o.messages)
            std::printf("    %s\n", m.c_str());
        if (t >= c.limit_s)
            std::printf("    over the time limit\n");
        std::fflush(stdout);
    }
    std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
