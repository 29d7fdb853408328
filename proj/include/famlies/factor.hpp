#pragma once

#include <famlies/control.hpp>
#include <famlies/views.hpp>

#include <optional>
#include <vector>

namespace famlies::factor {

using control::ControlNode;

/// LAPACK-style interchanges: at step k, row k was swapped with row piv[k] (k <= piv[k]).
struct PivotVector {
    std::vector<index_t> piv;

    index_t size() const noexcept { return index_t(piv.size()); }
    /// Determinant of the permutation: -1 for an odd number of effective swaps.
    int sign() const noexcept;
    friend bool operator==(const PivotVector &, const PivotVector &) = default;
};

enum class Direction { Forward, Backward };

/// Applies the row interchanges in ascending (forward) or descending (backward) order.
void apply_pivots(const MatrixView &a, const PivotVector &piv, Direction direction);

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

enum class Uplo { Lower, Upper };

/// In-place Cholesky. Lower: tril(a) := L with A = L*L^T. Upper runs the same code on the
/// transposed view, so triu(a) := L^T. The opposite strict triangle is never touched.
/// Throws NotPositiveDefinite with the global index of the failing pivot.
void cholesky(const MatrixView &a, Uplo uplo, const ControlNode &tree);
void cholesky(const MatrixView &a, Uplo uplo = Uplo::Lower);

// ---------------------------------------------------------------------------
// LU with partial pivoting
// ---------------------------------------------------------------------------

struct LuResult {
    PivotVector pivots;
    /// First column whose pivot was exactly zero (U(k,k) = 0); elimination continued.
    std::optional<index_t> zero_pivot;
};

/// P*A = L*U in place (unit L below the diagonal, U on and above it). Ties in the pivot
/// search go to the smallest row index.
LuResult lu_partial(const MatrixView &a, const ControlNode &tree);
LuResult lu_partial(const MatrixView &a);

/// b := A^{-1} b from the output of lu_partial. Throws SingularMatrix on a zero U diagonal.
void lu_solve(const MatrixView &factored, const PivotVector &piv, const MatrixView &b);

// ---------------------------------------------------------------------------
// Householder QR
// ---------------------------------------------------------------------------

/// Householder vectors live below the diagonal of the factored matrix (implicit unit head);
/// H_j = I - tau_j * v_j * v_j^T and A = H_0 * H_1 * ... * R.
struct Reflectors {
    std::vector<double> tau;
};

Reflectors qr_householder(const MatrixView &a, const ControlNode &tree);
Reflectors qr_householder(const MatrixView &a);

/// Thin Q (m x n) formed by applying the reflectors to the first n columns of I.
MatrixView form_q(const MatrixView &factored, const Reflectors &refl);
/// Upper triangle of the factored matrix as an n x n matrix.
MatrixView extract_r(const MatrixView &factored);

// ---------------------------------------------------------------------------
// Skew-symmetric L*T*L^T and the Pfaffian
// ---------------------------------------------------------------------------

/// Skew-symmetric tridiagonal matrix: T(i+1,i) = t[i] = -T(i,i+1).
struct TridiagSkew {
    std::vector<double> t;
    index_t n = 0;
};

struct LtltResult {
    PivotVector pivots; // piv[0] = 0; the step that eliminates column k picks row piv[k+1]
    TridiagSkew tridiag;
};

/// P*X*P^T = L*T*L^T for skew-symmetric X; only the strict lower triangle is read.
///
/// On return the subdiagonal of x holds t and, for j >= 1, L(i,j) (i > j) is stored at
/// x(i, j-1); L has unit diagonal and first column e_0. The unblocked form exposes one extra
/// column per step (4x4 repartitioning); the blocked form factors a panel column by column,
/// exposes the next column as lookahead (5x5) and updates the trailing matrix with one fused
/// sandwich product C -= A*T*A^T.
LtltResult ltlt_pivoted(const MatrixView &x, const ControlNode &tree);
LtltResult ltlt_pivoted(const MatrixView &x);

/// Unit lower triangular L recovered from ltlt_pivoted's packed storage.
MatrixView ltlt_unpack_l(const MatrixView &factored);

/// Pfaffian via ltlt_pivoted on a copy of x. Odd order returns exactly 0.
/// Throws ContractError if x is not skew-symmetric to within n*eps*max|x|.
double pfaffian(const MatrixView &x, const ControlNode &tree);
double pfaffian(const MatrixView &x);

} // namespace famlies::factor
