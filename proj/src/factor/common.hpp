#pragma once

#include <famlies/engine.hpp>
#include <famlies/factor.hpp>

#include <utility>

namespace famlies::factor::detail {

/// Raw typed accessor for the scalar loops of the unblocked variants.
template <class T>
struct Mat {
    T *p;
    index_t rs, cs;
    T &operator()(index_t i, index_t j) const { return p[i * rs + j * cs]; }
};

template <class T>
Mat<T> mat(const MatrixView &v) {
    return {v.data<T>(), v.row_stride(), v.col_stride()};
}

template <class T>
void swap_rows(const MatrixView &a, index_t r1, index_t r2) {
    if (r1 == r2 || a.cols() == 0)
        return;
    Mat<T> m = mat<T>(a);
    for (index_t j = 0; j < a.cols(); ++j)
        std::swap(m(r1, j), m(r2, j));
}

/// Kernel config and worker count for the level-3 calls issued at `node`.
struct Level {
    engine::KernelConfig cfg;
    int ways;
};

inline Level level_of(const ControlNode &node, const engine::KernelConfig &inherited) {
    return {node.kernel_config(inherited), node.ways};
}

/// Child tree for the recursive sub-problem, falling back to the given leaf.
inline const ControlNode &child_or(const ControlNode &node, const ControlNode &leaf) {
    return node.child ? *node.child : leaf;
}

} // namespace famlies::factor::detail
