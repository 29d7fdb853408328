#pragma once

// Brute-force references. These depend on the views layer only and are kept slow and obvious:
// every routine accumulates in double regardless of the operand type.

#include <famlies/views.hpp>

#include <string_view>
#include <vector>

namespace famlies::oracle {

/// Textbook triple loop (ascending i, j, k): c := beta*c + alpha*a*b.
void gemm_naive(double alpha, const MatrixView &a, const MatrixView &b, double beta,
                const MatrixView &c);

/// Scalar right-looking Cholesky of the lower triangle, positive diagonal.
void chol_scalar(const MatrixView &a);

/// Scalar partial-pivoted elimination; ties go to the smallest row index.
std::vector<index_t> lu_scalar(const MatrixView &a);

/// Signed sum over perfect matchings of the upper-triangle entries. n <= 12.
double pfaffian_combinatorial(const MatrixView &x);

/// Nested loops over every label assignment of an einsum spec "ab,bc->ac".
void contract_naive(double alpha, const TensorView &a, const TensorView &b, double beta,
                    const TensorView &c, std::string_view spec);

// ---------------------------------------------------------------------------
// Residuals of factored forms, formed explicitly and in double.
// ---------------------------------------------------------------------------

double frobenius(const MatrixView &a);
double max_abs(const MatrixView &a);
/// max |a(i,j) - b(i,j)|
double max_abs_diff(const MatrixView &a, const MatrixView &b);

/// ||A - L*L^T||_F / ||A||_F with L = tril(factored).
double chol_residual(const MatrixView &a, const MatrixView &factored);
/// ||P*A - L*U||_F / ||A||_F with unit L and U packed in factored.
double lu_residual(const MatrixView &a, const MatrixView &factored,
                   const std::vector<index_t> &piv);
/// ||A - Q*R||_F / ||A||_F.
double qr_residual(const MatrixView &a, const MatrixView &q, const MatrixView &r);
/// ||Q^T*Q - I||_F.
double orthogonality(const MatrixView &q);
/// ||P*X*P^T - L*T*L^T||_F / ||X||_F for the packed L*T*L^T storage (L(i,j) at (i,j-1)).
double ltlt_residual(const MatrixView &x, const MatrixView &factored,
                     const std::vector<index_t> &piv, const std::vector<double> &t);
/// ||A*x - b||_F / (||A||_F * ||x||_F).
double solve_residual(const MatrixView &a, const MatrixView &x, const MatrixView &b);
/// Determinant by scalar partial-pivoted elimination (on a copy).
double determinant(const MatrixView &a);

} // namespace famlies::oracle
