#include <famlies/engine.hpp>
#include <famlies/random.hpp>

namespace famlies::random {

void fill_uniform(const MatrixView &a, Rng &rng) {
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            a.set(i, j, rng.uniform());
}

void fill_uniform(const TensorView &t, Rng &rng) {
    if (t.size() == 0)
        return;
    std::vector<index_t> idx(std::size_t(t.rank()), 0);
    do {
        t.set(idx, rng.uniform());
    } while (next_index(idx, t.dims()));
}

MatrixView uniform_matrix(index_t m, index_t n, DType dtype, std::uint64_t seed, Layout layout) {
    MatrixView a = make_view(m, n, dtype, layout);
    Rng rng(seed);
    fill_uniform(a, rng);
    return a;
}

MatrixView spd_matrix(index_t n, DType dtype, std::uint64_t seed) {
    MatrixView m = uniform_matrix(n, n, dtype, seed);
    MatrixView a = make_view(n, n, dtype);
    engine::gemm(1.0, m, transposed(m), 0.0, a);
    for (index_t i = 0; i < n; ++i)
        a.set(i, i, a.get(i, i) + double(n));
    return a;
}

MatrixView dominant_matrix(index_t n, DType dtype, std::uint64_t seed) {
    MatrixView a = uniform_matrix(n, n, dtype, seed);
    for (index_t i = 0; i < n; ++i)
        a.set(i, i, a.get(i, i) + double(n));
    return a;
}

MatrixView skew_matrix(index_t n, DType dtype, std::uint64_t seed) {
    MatrixView m = uniform_matrix(n, n, dtype, seed);
    MatrixView x = make_view(n, n, dtype);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < n; ++j)
            x.set(i, j, m.get(i, j) - m.get(j, i));
    return x;
}

} // namespace famlies::random
