#pragma once

// Parameterised property checks shared by `famlies check` and the acceptance runner.

#include <famlies/views.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace famlies::props {

struct Outcome {
    int cases    = 0;
    int failed   = 0;
    double worst = 0; // largest observed error / tolerance ratio
    std::vector<std::string> messages; // first few failures

    bool ok() const noexcept { return failed == 0; }
    /// Counts one case; a failing case keeps its message (up to a handful).
    void expect(bool pass, const std::string &what);
    /// Counts one case that passes when err <= tol.
    void within(double err, double tol, const std::string &what);
    void merge(const Outcome &other);
    std::string summary() const;
};

// views
Outcome partition_coverage(index_t max_n, index_t max_bs);
Outcome view_algebra(index_t max_dim);

// engine
/// Random m,n,k <= max_dim under contiguous, transposed and padded storage, f32 and f64.
Outcome gemm_oracle(int cases, index_t max_dim, std::uint64_t seed);
Outcome gemm_determinism(index_t n, const std::vector<int> &ways, std::uint64_t seed);
Outcome gemmt_canary(int cases, std::uint64_t seed);
/// Fused sandwich product vs explicit T*A^T followed by gemmt_lower, plus the workspace bound.
Outcome sandwich_fusion(int cases, std::uint64_t seed);

// control
Outcome control_trees();

// factorizations
Outcome cholesky_family(const std::vector<index_t> &ns, const std::vector<index_t> &bss,
                        std::uint64_t seed);
Outcome cholesky_upper(const std::vector<index_t> &ns, std::uint64_t seed);
Outcome lu_family(const std::vector<index_t> &ns, const std::vector<index_t> &bss,
                  std::uint64_t seed);
Outcome qr_family(index_t m, index_t n, const std::vector<index_t> &bss, std::uint64_t seed);
Outcome ltlt_reconstruction(const std::vector<index_t> &ns, const std::vector<index_t> &bss,
                            std::uint64_t seed);
Outcome pfaffian_vs_matchings(int count, std::uint64_t seed);
Outcome pfaffian_vs_determinant(const std::vector<index_t> &ns, std::uint64_t seed);
/// pf(P X P^T) = det(P) pf(X) for even n <= max_n; odd orders give 0.
Outcome pfaffian_permutation(index_t max_n, std::uint64_t seed);

// tensor
/// Random contractions with operand ranks 2..4 and mode sizes <= 5.
Outcome contraction(int specs, std::uint64_t seed);
/// Every block-scatter map of tensors up to rank 3 with mode sizes <= max_size.
Outcome scatter_exhaustive(index_t max_size);

} // namespace famlies::props
