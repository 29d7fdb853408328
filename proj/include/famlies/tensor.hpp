#pragma once

#include <famlies/engine.hpp>
#include <famlies/views.hpp>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace famlies::tensor {

/// Einsum-style contraction "abk,kc->abc". Labels are lowercase letters; each label of c
/// appears in exactly one of a and b, labels shared by a and b but absent from c are summed.
struct ContractionSpec {
    std::string a, b, c;

    /// Throws ConfigError on malformed strings or label rules being broken.
    static ContractionSpec parse(std::string_view text);
    std::string str() const;
    friend bool operator==(const ContractionSpec &, const ContractionSpec &) = default;
};

/// Matrix facade over a tensor. rscat[i] / cscat[j] are element offsets (relative to the
/// tensor's data pointer) of matrix row i / column j; the element (i,j) lives at
/// rscat[i] + cscat[j]. rbs[b] is the common step of rscat within row block b (size mr),
/// or 0 when that block is not an arithmetic progression; cbs likewise with nr.
struct BlockScatterView {
    index_t m = 0, n = 0;
    index_t mr = 1, nr = 1;
    std::vector<index_t> rscat, cscat;
    std::vector<index_t> rbs, cbs;
};

/// Row modes and column modes must partition the tensor's modes. Multi-indices are
/// linearised with the last listed mode fastest.
BlockScatterView block_scatter(const TensorView &t, std::span<const int> row_modes,
                               std::span<const int> col_modes, index_t mr, index_t nr);

/// Offsets of a linearised group of (dim, stride) modes, last mode fastest.
std::vector<index_t> scatter_offsets(std::span<const index_t> dims,
                                     std::span<const index_t> strides);
/// Per-block stride summary of a scatter vector (see BlockScatterView). `inner` is reported
/// for blocks holding a single element.
std::vector<index_t> block_strides(std::span<const index_t> scat, index_t block, index_t inner);

/// A (possibly folded) matricised mode: labels merged into it, total extent, and its
/// stride in each operand (0 when the operand does not carry it).
struct PlanMode {
    std::string labels;
    index_t dim = 1;
    index_t stride_a = 0, stride_b = 0, stride_c = 0;
};

/// Contraction as a single matrix product: C(M,N) += A(M,K) * B(K,N).
struct ContractionPlan {
    std::vector<PlanMode> m_modes, n_modes, k_modes;
    index_t m = 1, n = 1, k = 1;
    BlockScatterView a, b, c; // a: M x K, b: K x N, c: M x N
};

/// Classifies labels into M (a and c), N (b and c) and K (a and b). M and N are ordered by
/// decreasing stride in c, K by decreasing stride in a; with `fold`, neighbouring modes whose
/// strides are contiguous products in every operand holding them merge into one.
ContractionPlan plan_contraction(const ContractionSpec &spec, const TensorView &a,
                                 const TensorView &b, const TensorView &c, index_t mr,
                                 index_t nr, bool fold = true);

/// c := beta*c + alpha * contraction(a, b), routed through the packed five-loop engine with
/// scatter-aware packing.
void contract(double alpha, const TensorView &a, const TensorView &b, double beta,
              const TensorView &c, const ContractionSpec &spec, const engine::KernelConfig &cfg,
              int ways = 1, bool fold = true);
void contract(double alpha, const TensorView &a, const TensorView &b, double beta,
              const TensorView &c, std::string_view spec);

} // namespace famlies::tensor
