#pragma once

#include <famlies/errors.hpp>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

namespace famlies {

// ---------------------------------------------------------------------------
// Element types
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { F32, F64 };

constexpr std::size_t size_of(DType t) noexcept { return t == DType::F32 ? 4 : 8; }

/// Machine epsilon of the tag (F32 ~ 1.19e-7, F64 ~ 2.22e-16).
constexpr double eps(DType t) noexcept {
    return t == DType::F32 ? double(std::numeric_limits<float>::epsilon())
                           : std::numeric_limits<double>::epsilon();
}

std::string_view to_string(DType t) noexcept;
/// Accepts "f32" / "f64" (case-insensitive). Throws ConfigError otherwise.
DType parse_dtype(std::string_view s);

template <class T>
inline constexpr DType dtype_of = std::is_same_v<T, float> ? DType::F32 : DType::F64;

/// Runtime dispatch of a generic callable on the element type behind a tag.
template <class F>
decltype(auto) dispatch(DType t, F &&f) {
    if (t == DType::F32)
        return std::forward<F>(f)(float{});
    return std::forward<F>(f)(double{});
}

// ---------------------------------------------------------------------------
// Storage
// ---------------------------------------------------------------------------

/// Untyped, 64-byte aligned element buffer shared by every view that aliases it.
class Storage {
  public:
    explicit Storage(std::size_t bytes);
    ~Storage();
    Storage(const Storage &)            = delete;
    Storage &operator=(const Storage &) = delete;

    std::byte *data() const noexcept { return data_; }
    std::size_t size_bytes() const noexcept { return bytes_; }

  private:
    std::byte *data_;
    std::size_t bytes_;
};

// ---------------------------------------------------------------------------
// Ranges and partitioning
// ---------------------------------------------------------------------------

/// Half-open index interval [start, start + len).
struct Range {
    index_t start = 0;
    index_t len   = 0;

    constexpr index_t end() const noexcept { return start + len; }
    constexpr bool empty() const noexcept { return len == 0; }
    friend constexpr bool operator==(const Range &, const Range &) = default;
};

/// [begin, end) as a Range.
constexpr Range span_of(index_t begin, index_t end) noexcept { return {begin, end - begin}; }

/// One repartitioning step: r0 processed, r1 active, r2 remainder.
/// r1b (lookahead) is the leading part of r2 that tridiagonal algorithms need exposed.
struct PartitionStep {
    Range r0, r1, r2;
    std::optional<Range> r1b;
    friend bool operator==(const PartitionStep &, const PartitionStep &) = default;
};

/// Steps of a forward traversal of [0, n) with block size bs. The sequence ends when r1 would
/// be empty, so n == 0 yields no steps.
std::vector<PartitionStep> partition_steps(index_t n, index_t bs, index_t lookahead = 0);

// ---------------------------------------------------------------------------
// Matrix views
// ---------------------------------------------------------------------------

enum class Layout { RowMajor, ColMajor };
enum class Fill { Zeros, Sequence };

/// A strided window into shared element storage. Copying a view never copies elements.
class MatrixView {
  public:
    MatrixView() = default;
    /// Throws DimensionError if any addressable element falls outside the storage.
    MatrixView(std::shared_ptr<Storage> storage, index_t offset, index_t m, index_t n, index_t rs,
               index_t cs, DType dtype);

    index_t rows() const noexcept { return m_; }
    index_t cols() const noexcept { return n_; }
    index_t row_stride() const noexcept { return rs_; }
    index_t col_stride() const noexcept { return cs_; }
    index_t offset() const noexcept { return offset_; }
    DType dtype() const noexcept { return dtype_; }
    bool empty() const noexcept { return m_ == 0 || n_ == 0; }
    const std::shared_ptr<Storage> &storage() const noexcept { return storage_; }

    /// Typed pointer to element (0,0). Throws ConfigError on dtype mismatch.
    template <class T>
    T *data() const {
        if (dtype_of<T> != dtype_)
            throw ConfigError("view element type does not match requested type");
        return reinterpret_cast<T *>(storage_->data()) + offset_;
    }

    template <class T>
    T &at(index_t i, index_t j) const {
        return data<T>()[i * rs_ + j * cs_];
    }

    /// Runtime-typed element access (converts through double).
    double get(index_t i, index_t j) const;
    void set(index_t i, index_t j, double v) const;

    /// Aliasing sub-view, same as subview(*this, rows, cols).
    MatrixView operator()(Range rows, Range cols) const;

  private:
    std::shared_ptr<Storage> storage_;
    index_t offset_ = 0;
    index_t m_ = 0, n_ = 0;
    index_t rs_ = 1, cs_ = 1;
    DType dtype_ = DType::F64;
};

MatrixView make_view(index_t m, index_t n, DType dtype, Layout layout = Layout::RowMajor,
                     Fill fill = Fill::Zeros);
/// `values` are given in row-major logical order (values[i*n + j]) whatever the layout.
MatrixView make_view(index_t m, index_t n, DType dtype, Layout layout,
                     std::span<const double> values);

MatrixView subview(const MatrixView &a, Range rows, Range cols);
MatrixView transposed(const MatrixView &a) noexcept;

/// Fresh contiguous copy (row-major unless requested otherwise).
MatrixView copy_of(const MatrixView &a, Layout layout = Layout::RowMajor);
/// Elementwise copy between conformal views of the same dtype.
void copy_into(const MatrixView &src, const MatrixView &dst);

/// True when the two views may address a common element. Exact for views that live on a common
/// two-stride lattice (the usual sub-blocks of one matrix, transposed or not), conservative
/// otherwise.
bool overlaps(const MatrixView &a, const MatrixView &b);

/// True when a view may be used as a write target (distinct (i,j) map to distinct addresses).
bool is_injective(const MatrixView &a);

// ---------------------------------------------------------------------------
// Tensor views
// ---------------------------------------------------------------------------

inline constexpr int max_tensor_rank = 8;

/// Dense strided tensor view; the last listed mode is the fastest in row-major layouts.
class TensorView {
  public:
    TensorView() = default;
    TensorView(std::shared_ptr<Storage> storage, index_t offset, std::vector<index_t> dims,
               std::vector<index_t> strides, DType dtype);

    int rank() const noexcept { return int(dims_.size()); }
    std::span<const index_t> dims() const noexcept { return dims_; }
    std::span<const index_t> strides() const noexcept { return strides_; }
    index_t dim(int mode) const { return dims_.at(std::size_t(mode)); }
    index_t stride(int mode) const { return strides_.at(std::size_t(mode)); }
    index_t offset() const noexcept { return offset_; }
    DType dtype() const noexcept { return dtype_; }
    index_t size() const noexcept;
    const std::shared_ptr<Storage> &storage() const noexcept { return storage_; }

    template <class T>
    T *data() const {
        if (dtype_of<T> != dtype_)
            throw ConfigError("tensor element type does not match requested type");
        return reinterpret_cast<T *>(storage_->data()) + offset_;
    }

    /// Element offset (relative to data()) of a multi-index.
    index_t linear(std::span<const index_t> idx) const;
    double get(std::span<const index_t> idx) const;
    void set(std::span<const index_t> idx, double v) const;

  private:
    std::shared_ptr<Storage> storage_;
    index_t offset_ = 0;
    std::vector<index_t> dims_, strides_;
    DType dtype_ = DType::F64;
};

/// Row-major contiguous tensor (zero filled).
TensorView make_tensor(std::vector<index_t> dims, DType dtype);
/// Tensor whose modes are laid out in `order` (order[0] slowest), with `pad` extra elements
/// added to every stride above the fastest one.
TensorView make_tensor(std::vector<index_t> dims, DType dtype, std::span<const int> order,
                       index_t pad);

/// Advance a row-major odometer over `dims`; returns false after the last multi-index.
bool next_index(std::span<index_t> idx, std::span<const index_t> dims) noexcept;

} // namespace famlies
