#pragma once

#include <famlies/engine.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace famlies::control {

enum class Op { Cholesky, LU, QR, LTLT, Gemm };

std::string_view to_string(Op op) noexcept;
std::optional<Op> parse_op(std::string_view s) noexcept;

/// Algorithmic variant. Cholesky variants are numbered 1..3 (bordered, left-looking,
/// right-looking) in both blocked and unblocked form; the other operations have one blocked
/// and one unblocked form, with number 0.
struct Variant {
    bool blocked = false;
    int number   = 0;

    static constexpr Variant blocked_v(int n = 0) { return {true, n}; }
    static constexpr Variant unblocked_v(int n = 0) { return {false, n}; }
    friend bool operator==(const Variant &, const Variant &) = default;
};

struct KernelOverrides {
    std::optional<index_t> mr, nr, mc, kc, nc;

    engine::KernelConfig apply(engine::KernelConfig cfg) const;
    bool empty() const noexcept { return !mr && !nr && !mc && !kc && !nc; }
    friend bool operator==(const KernelOverrides &, const KernelOverrides &) = default;
};

/// One level of a control tree: which variant to run, its block size, how many workers its
/// level-3 calls use, kernel overrides, and the tree for the recursive sub-problem.
/// Nodes are immutable once built and may be shared between threads.
struct ControlNode {
    Op op           = Op::Cholesky;
    Variant variant = {};
    std::optional<index_t> bs;
    int ways = 1;
    std::optional<KernelOverrides> kernel;
    std::shared_ptr<const ControlNode> child;

    /// Number of nodes on the path from this node to its leaf.
    int depth() const noexcept;
    /// Kernel config for level-3 calls issued at this node, given the inherited one.
    engine::KernelConfig kernel_config(const engine::KernelConfig &inherited) const;

    friend bool operator==(const ControlNode &a, const ControlNode &b);
};

inline constexpr int max_tree_depth = 16;

struct Diagnostic {
    std::string path;
    std::string message;
};

/// Raised by parse_tree (syntax and schema problems) and by require_valid.
class InvalidControlTree : public Error {
  public:
    explicit InvalidControlTree(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic> &diagnostics() const noexcept { return diagnostics_; }

  private:
    std::vector<Diagnostic> diagnostics_;
};

/// Parses the JSON control-tree document. Unknown fields are rejected, and the structural
/// invariants (no bs on unblocked nodes, depth limit, child compatibility) are enforced.
ControlNode parse_tree(std::string_view text);
std::string serialize(const ControlNode &node);

/// Problem a tree is validated against.
struct Problem {
    Op op;
    index_t m = 0, n = 0, k = 0;
};

/// Returns every violation found (empty when the tree is usable for the problem).
std::vector<Diagnostic> validate(const ControlNode &node, const Problem &problem);
std::vector<Diagnostic> validate(const ControlNode &node);
void require_valid(const ControlNode &node, const Problem &problem);

/// Two-level default: blocked right-looking form with bs=128 over the matching unblocked leaf,
/// or the leaf alone when n <= 128.
ControlNode default_tree(Op op, index_t n, DType dtype);

/// Every tree with `depth` blocked levels drawn from variants x block_sizes, over each possible
/// unblocked leaf. For gemm the block sizes are kc overrides of a single node.
std::vector<ControlNode> enumerate_trees(Op op, const std::vector<Variant> &variants,
                                         const std::vector<index_t> &block_sizes, int depth);

/// Compact "v3.bs128/u3" style rendering of the variant/block-size path (no commas).
std::string describe(const ControlNode &node);

/// Leaf variants available for an operation.
std::vector<Variant> leaf_variants(Op op);

} // namespace famlies::control
