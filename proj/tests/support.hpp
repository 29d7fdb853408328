#pragma once

#include <famlies/views.hpp>

#include <cstring>
#include <initializer_list>
#include <vector>

namespace famlies::test {

/// Row-major matrix from nested literals.
inline MatrixView mat(std::initializer_list<std::initializer_list<double>> rows,
                      DType dtype = DType::F64, Layout layout = Layout::RowMajor) {
    std::vector<double> flat;
    index_t n = 0;
    for (auto r : rows) {
        n = index_t(r.size());
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return make_view(index_t(rows.size()), n, dtype, layout, flat);
}

/// Copy of a embedded in a larger buffer: row stride rows+pad (column-major style) so that
/// neither stride is 1 after an optional transpose.
inline MatrixView padded_copy(const MatrixView &a, index_t pad) {
    MatrixView big = make_view(a.rows() + pad, a.cols() + pad, a.dtype(), Layout::ColMajor);
    MatrixView sub = big(Range{pad / 2, a.rows()}, Range{pad / 2, a.cols()});
    copy_into(a, sub);
    return sub;
}

inline bool bitwise_equal(const MatrixView &a, const MatrixView &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.dtype() != b.dtype())
        return false;
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j) {
            const double x = a.get(i, j), y = b.get(i, j);
            if (std::memcmp(&x, &y, sizeof x) != 0)
                return false;
        }
    return true;
}

} // namespace famlies::test
