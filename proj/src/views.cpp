#include <famlies/views.hpp>

#include <algorithm>
#include <cctype>
#include <new>
#include <numeric>
#include <string>
#include <unordered_set>

namespace famlies {

std::string_view to_string(DType t) noexcept { return t == DType::F32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (lower == "f32")
        return DType::F32;
    if (lower == "f64")
        return DType::F64;
    throw ConfigError("unknown dtype '" + std::string(s) + "' (expected f32 or f64)");
}

// ---------------------------------------------------------------------------

static constexpr std::align_val_t storage_alignment{64};

Storage::Storage(std::size_t bytes)
    : data_(static_cast<std::byte *>(::operator new[](std::max<std::size_t>(bytes, 1),
                                                      storage_alignment))),
      bytes_(bytes) {}

Storage::~Storage() { ::operator delete[](data_, storage_alignment); }

// ---------------------------------------------------------------------------

std::vector<PartitionStep> partition_steps(index_t n, index_t bs, index_t lookahead) {
    if (bs < 1)
        throw DimensionError("partition_steps: block size must be >= 1");
    if (n < 0 || lookahead < 0)
        throw DimensionError("partition_steps: negative size or lookahead");
    std::vector<PartitionStep> steps;
    steps.reserve(std::size_t((n + bs - 1) / bs));
    for (index_t done = 0; done < n;) {
        index_t b = std::min(bs, n - done);
        PartitionStep s{span_of(0, done), {done, b}, span_of(done + b, n), std::nullopt};
        if (lookahead > 0)
            s.r1b = Range{s.r2.start, std::min(lookahead, s.r2.len)};
        steps.push_back(s);
        done += b;
    }
    return steps;
}

// ---------------------------------------------------------------------------

namespace {

index_t checked_mul(index_t a, index_t b) {
    if (a != 0 && b > std::numeric_limits<index_t>::max() / a)
        throw std::length_error("element count overflows the index type");
    return a * b;
}

// Smallest and largest element offsets reached by the view, relative to offset 0.
std::pair<index_t, index_t> extent_span(index_t offset, index_t m, index_t n, index_t rs,
                                        index_t cs) {
    index_t lo = offset, hi = offset;
    if (m > 1)
        (rs < 0 ? lo : hi) += (m - 1) * rs;
    if (n > 1)
        (cs < 0 ? lo : hi) += (n - 1) * cs;
    return {lo, hi};
}

} // namespace

MatrixView::MatrixView(std::shared_ptr<Storage> storage, index_t offset, index_t m, index_t n,
                       index_t rs, index_t cs, DType dtype)
    : storage_(std::move(storage)), offset_(offset), m_(m), n_(n), rs_(rs), cs_(cs),
      dtype_(dtype) {
    if (m < 0 || n < 0)
        throw DimensionError("matrix view with negative dimension");
    if (!storage_)
        throw DimensionError("matrix view without storage");
    if (m > 0 && n > 0) {
        auto [lo, hi] = extent_span(offset, m, n, rs, cs);
        index_t elems = index_t(storage_->size_bytes() / size_of(dtype));
        if (lo < 0 || hi >= elems)
            throw DimensionError("matrix view addresses elements outside its storage");
    }
}

double MatrixView::get(index_t i, index_t j) const {
    return dispatch(dtype_, [&](auto t) { return double(at<decltype(t)>(i, j)); });
}

void MatrixView::set(index_t i, index_t j, double v) const {
    dispatch(dtype_, [&](auto t) { at<decltype(t)>(i, j) = decltype(t)(v); });
}

MatrixView MatrixView::operator()(Range rows, Range cols) const {
    return subview(*this, rows, cols);
}

MatrixView make_view(index_t m, index_t n, DType dtype, Layout layout, Fill fill) {
    if (m < 0 || n < 0)
        throw DimensionError("make_view: negative dimension");
    index_t count = checked_mul(m, n);
    checked_mul(count, index_t(size_of(dtype)));
    auto storage = std::make_shared<Storage>(std::size_t(count) * size_of(dtype));
    index_t rs = layout == Layout::RowMajor ? n : 1;
    index_t cs = layout == Layout::RowMajor ? 1 : m;
    dispatch(dtype, [&](auto t) {
        using T = decltype(t);
        T *p    = reinterpret_cast<T *>(storage->data());
        for (index_t e = 0; e < count; ++e)
            p[e] = fill == Fill::Zeros ? T(0) : T(e + 1);
    });
    return MatrixView(std::move(storage), 0, m, n, std::max<index_t>(rs, 1),
                      std::max<index_t>(cs, 1), dtype);
}

MatrixView make_view(index_t m, index_t n, DType dtype, Layout layout,
                     std::span<const double> values) {
    MatrixView v = make_view(m, n, dtype, layout, Fill::Zeros);
    if (index_t(values.size()) != m * n)
        throw DimensionError("make_view: expected " + std::to_string(m * n) + " values, got " +
                             std::to_string(values.size()));
    for (index_t i = 0; i < m; ++i)
        for (index_t j = 0; j < n; ++j)
            v.set(i, j, values[std::size_t(i * n + j)]);
    return v;
}

MatrixView subview(const MatrixView &a, Range rows, Range cols) {
    if (rows.start < 0 || rows.len < 0 || rows.end() > a.rows() || cols.start < 0 ||
        cols.len < 0 || cols.end() > a.cols())
        throw DimensionError("subview: range out of bounds");
    return MatrixView(a.storage(),
                      a.offset() + rows.start * a.row_stride() + cols.start * a.col_stride(),
                      rows.len, cols.len, a.row_stride(), a.col_stride(), a.dtype());
}

MatrixView transposed(const MatrixView &a) noexcept {
    return MatrixView(a.storage(), a.offset(), a.cols(), a.rows(), a.col_stride(),
                      a.row_stride(), a.dtype());
}

MatrixView copy_of(const MatrixView &a, Layout layout) {
    MatrixView c = make_view(a.rows(), a.cols(), a.dtype(), layout);
    copy_into(a, c);
    return c;
}

void copy_into(const MatrixView &src, const MatrixView &dst) {
    if (src.rows() != dst.rows() || src.cols() != dst.cols())
        throw DimensionError("copy_into: shape mismatch");
    if (src.dtype() != dst.dtype())
        throw ConfigError("copy_into: dtype mismatch");
    if (src.empty())
        return;
    dispatch(src.dtype(), [&](auto t) {
        using T      = decltype(t);
        const T *s   = src.data<T>();
        T *d         = dst.data<T>();
        for (index_t i = 0; i < src.rows(); ++i)
            for (index_t j = 0; j < src.cols(); ++j)
                d[i * dst.row_stride() + j * dst.col_stride()] =
                    s[i * src.row_stride() + j * src.col_stride()];
    });
}

// ---------------------------------------------------------------------------
// Overlap analysis
// ---------------------------------------------------------------------------

namespace {

struct Axis {
    index_t stride, extent;
};

// Axes with extent > 1, sorted by increasing stride.
std::vector<Axis> live_axes(const MatrixView &v) {
    std::vector<Axis> axes;
    if (v.rows() > 1)
        axes.push_back({v.row_stride(), v.rows()});
    if (v.cols() > 1)
        axes.push_back({v.col_stride(), v.cols()});
    std::sort(axes.begin(), axes.end(),
              [](const Axis &x, const Axis &y) { return x.stride < y.stride; });
    return axes;
}

bool progressions_meet(index_t a0, index_t na, index_t b0, index_t nb, index_t step) {
    index_t a1 = a0 + (na - 1) * step, b1 = b0 + (nb - 1) * step;
    if (a1 < b0 || b1 < a0)
        return false;
    return step == 0 || (a0 - b0) % step == 0;
}

bool spans_meet(const MatrixView &a, const MatrixView &b) {
    std::size_t wa = size_of(a.dtype()), wb = size_of(b.dtype());
    auto [alo, ahi] = extent_span(a.offset(), a.rows(), a.cols(), a.row_stride(), a.col_stride());
    auto [blo, bhi] = extent_span(b.offset(), b.rows(), b.cols(), b.row_stride(), b.col_stride());
    index_t abeg = alo * index_t(wa), aend = (ahi + 1) * index_t(wa);
    index_t bbeg = blo * index_t(wb), bend = (bhi + 1) * index_t(wb);
    return abeg < bend && bbeg < aend;
}

} // namespace

bool overlaps(const MatrixView &a, const MatrixView &b) {
    if (a.empty() || b.empty() || a.storage() != b.storage())
        return false;
    if (a.dtype() != b.dtype() || a.row_stride() < 0 || a.col_stride() < 0 ||
        b.row_stride() < 0 || b.col_stride() < 0)
        return spans_meet(a, b);

    auto aa = live_axes(a), ba = live_axes(b);
    std::vector<index_t> strides;
    for (auto &x : aa)
        strides.push_back(x.stride);
    for (auto &x : ba)
        strides.push_back(x.stride);
    std::sort(strides.begin(), strides.end());
    strides.erase(std::unique(strides.begin(), strides.end()), strides.end());

    if (strides.empty())
        return a.offset() == b.offset();
    if (strides.size() == 1) {
        // Both views are arithmetic progressions with a common step (or single points).
        if (aa.size() > 1 || ba.size() > 1)
            return spans_meet(a, b);
        index_t na = aa.empty() ? 1 : aa[0].extent;
        index_t nb = ba.empty() ? 1 : ba[0].extent;
        return progressions_meet(a.offset(), na, b.offset(), nb, strides[0]);
    }
    if (strides.size() > 2 || strides[0] <= 0)
        return spans_meet(a, b);

    const index_t minor = strides[0], major = strides[1];
    struct Lattice {
        index_t row0, rows, pos0, cols;
    };
    auto place = [&](const MatrixView &v, const std::vector<Axis> &axes,
                     Lattice &out) -> bool {
        index_t rows = 1, cols = 1;
        for (auto &x : axes) {
            index_t &slot = x.stride == major ? rows : cols;
            if (slot != 1)
                return false; // two axes on the same stride
            slot = x.extent;
        }
        index_t row0 = v.offset() / major, pos0 = v.offset() % major;
        if (pos0 + (cols - 1) * minor >= major)
            return false;
        out = {row0, rows, pos0, cols};
        return true;
    };
    Lattice la{}, lb{};
    if (!place(a, aa, la) || !place(b, ba, lb))
        return spans_meet(a, b);
    bool rows_meet = la.row0 < lb.row0 + lb.rows && lb.row0 < la.row0 + la.rows;
    return rows_meet && progressions_meet(la.pos0, la.cols, lb.pos0, lb.cols, minor);
}

bool is_injective(const MatrixView &a) {
    if (a.empty())
        return true;
    auto axes = live_axes(a);
    if (axes.empty())
        return true;
    if (axes.size() == 1)
        return axes[0].stride != 0;
    if (axes[0].stride > 0 && (axes[0].extent - 1) * axes[0].stride < axes[1].stride)
        return true;
    if (a.rows() * a.cols() > (1 << 20))
        return false;
    std::unordered_set<index_t> seen;
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            if (!seen.insert(i * a.row_stride() + j * a.col_stride()).second)
                return false;
    return true;
}

// ---------------------------------------------------------------------------
// Tensors
// ---------------------------------------------------------------------------

TensorView::TensorView(std::shared_ptr<Storage> storage, index_t offset,
                       std::vector<index_t> dims, std::vector<index_t> strides, DType dtype)
    : storage_(std::move(storage)), offset_(offset), dims_(std::move(dims)),
      strides_(std::move(strides)), dtype_(dtype) {
    if (dims_.size() != strides_.size())
        throw DimensionError("tensor view: dims and strides differ in length");
    if (dims_.size() > std::size_t(max_tensor_rank))
        throw DimensionError("tensor view: rank exceeds " + std::to_string(max_tensor_rank));
    if (!storage_)
        throw DimensionError("tensor view without storage");
    index_t hi = offset_;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
        if (dims_[d] < 0 || strides_[d] < 0)
            throw DimensionError("tensor view: negative dimension or stride");
        if (dims_[d] > 0)
            hi += (dims_[d] - 1) * strides_[d];
    }
    index_t elems = index_t(storage_->size_bytes() / size_of(dtype_));
    if (size() > 0 && (offset_ < 0 || hi >= elems))
        throw DimensionError("tensor view addresses elements outside its storage");
}

index_t TensorView::size() const noexcept {
    index_t s = 1;
    for (index_t d : dims_)
        s *= d;
    return s;
}

index_t TensorView::linear(std::span<const index_t> idx) const {
    index_t off = 0;
    for (std::size_t d = 0; d < dims_.size(); ++d)
        off += idx[d] * strides_[d];
    return off;
}

double TensorView::get(std::span<const index_t> idx) const {
    return dispatch(dtype_, [&](auto t) { return double(data<decltype(t)>()[linear(idx)]); });
}

void TensorView::set(std::span<const index_t> idx, double v) const {
    dispatch(dtype_, [&](auto t) { data<decltype(t)>()[linear(idx)] = decltype(t)(v); });
}

TensorView make_tensor(std::vector<index_t> dims, DType dtype) {
    std::vector<int> order(dims.size());
    std::iota(order.begin(), order.end(), 0);
    return make_tensor(std::move(dims), dtype, order, 0);
}

TensorView make_tensor(std::vector<index_t> dims, DType dtype, std::span<const int> order,
                       index_t pad) {
    if (order.size() != dims.size())
        throw DimensionError("make_tensor: order must list every mode once");
    std::vector<index_t> strides(dims.size(), 0);
    std::vector<bool> used(dims.size(), false);
    index_t s = 1;
    for (std::size_t p = order.size(); p-- > 0;) {
        auto mode = std::size_t(order[p]);
        if (mode >= dims.size() || used[mode])
            throw DimensionError("make_tensor: order is not a permutation of the modes");
        used[mode]    = true;
        strides[mode] = s;
        s             = checked_mul(s, std::max<index_t>(dims[mode], 1)) + pad;
    }
    auto storage = std::make_shared<Storage>(std::size_t(s) * size_of(dtype));
    std::fill_n(storage->data(), storage->size_bytes(), std::byte{0});
    return TensorView(std::move(storage), 0, std::move(dims), std::move(strides), dtype);
}

bool next_index(std::span<index_t> idx, std::span<const index_t> dims) noexcept {
    for (std::size_t d = idx.size(); d-- > 0;) {
        if (++idx[d] < dims[d])
            return true;
        idx[d] = 0;
    }
    return false;
}

} // namespace famlies
