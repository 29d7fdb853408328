#include "five_loops.hpp"

#include <famlies/engine.hpp>

#include <algorithm>
#include <string>

namespace famlies::engine {

namespace detail {

namespace {
std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
} // namespace

void note_allocation(std::size_t elems) noexcept {
    std::size_t now  = g_current.fetch_add(elems) + elems;
    std::size_t peak = g_peak.load();
    while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
    }
}

void note_release(std::size_t elems) noexcept { g_current.fetch_sub(elems); }

} // namespace detail

AllocationStats allocation_stats() noexcept {
    return {detail::g_current.load(), detail::g_peak.load()};
}

void reset_allocation_peak() noexcept { detail::g_peak.store(detail::g_current.load()); }

// ---------------------------------------------------------------------------

KernelConfig KernelConfig::defaults(DType dtype) {
    KernelConfig cfg;
    cfg.dtype     = dtype;
    cfg.acc_dtype = dtype;
    if (dtype == DType::F32)
        cfg.kc = 512;
    return cfg;
}

void KernelConfig::validate() const {
    auto fail = [](const std::string &what) { throw ConfigError("kernel config: " + what); };
    if (mr < 1 || nr < 1 || mr > max_micro_tile || nr > max_micro_tile)
        fail("mr and nr must lie in [1, " + std::to_string(max_micro_tile) + "]");
    if (kc < 1)
        fail("kc must be >= 1");
    if (mc < mr || mc % mr != 0)
        fail("mc must be a positive multiple of mr");
    if (nc < nr || nc % nr != 0)
        fail("nc must be a positive multiple of nr");
    if (dtype == DType::F64 && acc_dtype == DType::F32)
        fail("accumulation type must be at least as precise as the operand type");
}

namespace {

void check_operands(const MatrixView &a, const MatrixView &b, const MatrixView &c,
                    const KernelConfig &cfg, int ways, const char *op) {
    if (a.rows() != c.rows() || b.cols() != c.cols() || a.cols() != b.rows())
        throw DimensionError(std::string(op) + ": non-conformal operands (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " -> " +
                             std::to_string(c.rows()) + "x" + std::to_string(c.cols()) + ")");
    if (a.dtype() != c.dtype() || b.dtype() != c.dtype())
        throw ConfigError(std::string(op) + ": operand dtypes differ");
    if (cfg.dtype != c.dtype())
        throw ConfigError(std::string(op) + ": kernel config dtype does not match operands");
    cfg.validate();
    if (ways < 1)
        throw ConfigError(std::string(op) + ": ways must be >= 1");
    if (c.empty())
        return;
    if (!is_injective(c))
        throw AliasingError(std::string(op) + ": output view maps two elements to one address");
    if (overlaps(c, a) || overlaps(c, b))
        throw AliasingError(std::string(op) + ": output overlaps an input operand");
}

template <class F>
void dispatch_acc(const KernelConfig &cfg, F &&f) {
    if (cfg.dtype == DType::F64)
        f(double{}, double{});
    else if (cfg.acc_dtype == DType::F64)
        f(float{}, double{});
    else
        f(float{}, float{});
}

template <class T>
detail::StridedA<T> strided_a(const MatrixView &v) {
    return {v.data<T>(), v.row_stride(), v.col_stride()};
}

template <class T>
detail::StridedB<T> strided_b(const MatrixView &v, const T *skew_t = nullptr) {
    return {v.data<T>(), v.row_stride(), v.col_stride(), v.rows(), skew_t};
}

template <class T>
detail::StridedC<T> strided_c(const MatrixView &v) {
    return {v.data<T>(), v.row_stride(), v.col_stride()};
}

void gemm_impl(double alpha, const MatrixView &a, const MatrixView &b, double beta,
               const MatrixView &c, const KernelConfig &cfg, int ways, bool lower) {
    if (c.empty())
        return;
    dispatch_acc(cfg, [&](auto t, auto acc) {
        using T   = decltype(t);
        using Acc = decltype(acc);
        if (a.cols() == 0 || alpha == 0.0) {
            detail::scale_strided(c.data<T>(), c.rows(), c.cols(), c.row_stride(),
                                  c.col_stride(), beta, lower);
            return;
        }
        detail::five_loops<T, Acc>(c.rows(), c.cols(), a.cols(), alpha, strided_a<T>(a),
                                   strided_b<T>(b), beta, strided_c<T>(c), cfg, ways, lower);
    });
}

} // namespace

void gemm(double alpha, const MatrixView &a, const MatrixView &b, double beta,
          const MatrixView &c, const KernelConfig &cfg, int ways) {
    check_operands(a, b, c, cfg, ways, "gemm");
    gemm_impl(alpha, a, b, beta, c, cfg, ways, false);
}

void gemm(double alpha, const MatrixView &a, const MatrixView &b, double beta,
          const MatrixView &c) {
    gemm(alpha, a, b, beta, c, KernelConfig::defaults(c.dtype()));
}

void gemmt_lower(double alpha, const MatrixView &a, const MatrixView &b, double beta,
                 const MatrixView &c, const KernelConfig &cfg, int ways) {
    if (c.rows() != c.cols())
        throw DimensionError("gemmt_lower: output must be square");
    check_operands(a, b, c, cfg, ways, "gemmt_lower");
    gemm_impl(alpha, a, b, beta, c, cfg, ways, true);
}

void gemmt_lower(double alpha, const MatrixView &a, const MatrixView &b, double beta,
                 const MatrixView &c) {
    gemmt_lower(alpha, a, b, beta, c, KernelConfig::defaults(c.dtype()));
}

void syrk_lower(double alpha, const MatrixView &a, double beta, const MatrixView &c,
                const KernelConfig &cfg, int ways) {
    gemmt_lower(alpha, a, transposed(a), beta, c, cfg, ways);
}

void syrk_lower(double alpha, const MatrixView &a, double beta, const MatrixView &c) {
    syrk_lower(alpha, a, beta, c, KernelConfig::defaults(c.dtype()));
}

void sandwich_skew(const MatrixView &c, const MatrixView &a, std::span<const double> t,
                   const KernelConfig &cfg, int ways) {
    if (c.rows() != c.cols() || a.rows() != c.rows())
        throw DimensionError("sandwich_skew: c must be n x n and a n x k");
    const index_t k = a.cols();
    if (index_t(t.size()) != std::max<index_t>(k - 1, 0))
        throw DimensionError("sandwich_skew: t must have length k-1 = " +
                             std::to_string(std::max<index_t>(k - 1, 0)));
    MatrixView at = transposed(a);
    check_operands(a, at, c, cfg, ways, "sandwich_skew");
    if (c.empty() || k <= 1)
        return;
    dispatch_acc(cfg, [&](auto tt, auto acc) {
        using T   = decltype(tt);
        using Acc = decltype(acc);
        std::vector<T> coeff(t.begin(), t.end());
        detail::five_loops<T, Acc>(c.rows(), c.cols(), k, -1.0, strided_a<T>(a),
                                   strided_b<T>(at, coeff.data()), 1.0, strided_c<T>(c), cfg,
                                   ways, true);
    });
}

void sandwich_skew(const MatrixView &c, const MatrixView &a, std::span<const double> t) {
    sandwich_skew(c, a, t, KernelConfig::defaults(c.dtype()));
}

// ---------------------------------------------------------------------------
// Exposed packing and micro-kernel (used directly by tests and tools)
// ---------------------------------------------------------------------------

PackedPanel pack_panel(const MatrixView &src, Side side, const KernelConfig &cfg,
                       const PackTransform &transform) {
    cfg.validate();
    if (src.dtype() != cfg.dtype)
        throw ConfigError("pack_panel: kernel config dtype does not match source");
    const bool skew = transform.kind == PackTransform::Kind::TridiagSkewRight;
    if (skew && side != Side::B)
        throw ConfigError("pack_panel: the tridiagonal transform applies to the B side only");
    if (skew && index_t(transform.t.size()) != std::max<index_t>(src.rows() - 1, 0))
        throw DimensionError("pack_panel: transform length must be source rows - 1");
    if (side == Side::A && (src.rows() > cfg.mc || src.cols() > cfg.kc))
        throw DimensionError("pack_panel: A source exceeds the mc x kc block");
    if (side == Side::B && (src.rows() > cfg.kc || src.cols() > cfg.nc))
        throw DimensionError("pack_panel: B source exceeds the kc x nc block");

    PackedPanel out;
    out.side      = side;
    out.panel_dim = side == Side::A ? cfg.mr : cfg.nr;
    out.k         = side == Side::A ? src.cols() : src.rows();
    out.n_panels  = detail::ceil_div(side == Side::A ? src.rows() : src.cols(), out.panel_dim);
    const index_t len = out.n_panels * out.panel_dim * out.k;
    if (len == 0)
        return out;
    dispatch(src.dtype(), [&](auto tt) {
        using T = decltype(tt);
        std::vector<T> buf(static_cast<std::size_t>(len));
        if (side == Side::A) {
            strided_a<T>(src).pack(buf.data(), 0, src.rows(), 0, src.cols(), cfg.mr);
        } else {
            std::vector<T> coeff(transform.t.begin(), transform.t.end());
            strided_b<T>(src, skew ? coeff.data() : nullptr)
                .pack(buf.data(), 0, src.rows(), 0, src.cols(), cfg.nr);
        }
        out.buffer.assign(buf.begin(), buf.end());
    });
    return out;
}

void microkernel(index_t k, double alpha, std::span<const double> a_panel,
                 std::span<const double> b_panel, double beta, const MatrixView &c,
                 const KernelConfig &cfg) {
    cfg.validate();
    if (c.dtype() != cfg.dtype)
        throw ConfigError("microkernel: kernel config dtype does not match c");
    if (k < 0 || index_t(a_panel.size()) < cfg.mr * k || index_t(b_panel.size()) < cfg.nr * k)
        throw DimensionError("microkernel: packed panels shorter than mr*k / nr*k");
    if (c.rows() > cfg.mr || c.cols() > cfg.nr)
        throw DimensionError("microkernel: c larger than the micro-tile");
    if (c.empty())
        return;
    dispatch_acc(cfg, [&](auto tt, auto acc) {
        using T   = decltype(tt);
        using Acc = decltype(acc);
        std::vector<T> a(a_panel.begin(), a_panel.begin() + cfg.mr * k);
        std::vector<T> b(b_panel.begin(), b_panel.begin() + cfg.nr * k);
        std::array<Acc, max_micro_tile * max_micro_tile> ab;
        detail::select_kernel<T, Acc>(cfg.mr, cfg.nr)(k, a.data(), b.data(), ab.data(), cfg.mr,
                                                      cfg.nr);
        detail::TileMask mask;
        mask.read_c = beta != 0.0;
        strided_c<T>(c).update(0, 0, c.rows(), c.cols(), ab.data(), cfg.mr, Acc(T(alpha)),
                               Acc(T(beta)), mask);
    });
}

} // namespace famlies::engine
