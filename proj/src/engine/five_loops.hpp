#pragma once

// Internal: the packed five-loop GEMM driver shared by gemm, gemmt, the fused sandwich product
// and block-scatter tensor contraction. Operands are small accessor structs so that strided
// matrices and scatter-indexed tensors go through the same loops and micro-kernels.

#include "workspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

namespace famlies::engine::detail {

inline index_t round_up(index_t x, index_t r) { return (x + r - 1) / r * r; }
inline index_t ceil_div(index_t x, index_t r) { return (x + r - 1) / r; }

// ---------------------------------------------------------------------------
// Micro-kernels. Packed A panels are k-major with mr rows, B panels k-major with nr columns.
// The accumulated tile is returned column-major: ab[j*mr + i].
// ---------------------------------------------------------------------------

// Multiply-add, fused where the target has FMA. The library is compiled with contraction off so
// that everything else rounds exactly as written, whatever the operand strides.
template <class Acc>
inline Acc madd(Acc x, Acc y, Acc z) {
#if defined(__FMA__)
    return std::fma(x, y, z);
#else
    return x * y + z;
#endif
}

template <class T, class Acc>
using KernelFn = void (*)(index_t k, const T *a, const T *b, Acc *ab, index_t mr, index_t nr);

template <class T, class Acc, int MR, int NR>
void kernel_fixed(index_t k, const T *__restrict a, const T *__restrict b, Acc *__restrict ab,
                  index_t, index_t) {
    Acc acc[NR][MR] = {};
    for (index_t p = 0; p < k; ++p) {
        Acc av[MR];
#pragma GCC unroll 32
        for (int i = 0; i < MR; ++i)
            av[i] = Acc(a[i]);
#pragma GCC unroll 32
        for (int j = 0; j < NR; ++j) {
            const Acc bj = Acc(b[j]);
            for (int i = 0; i < MR; ++i)
                acc[j][i] = madd(av[i], bj, acc[j][i]);
        }
        a += MR;
        b += NR;
    }
    for (int j = 0; j < NR; ++j)
        for (int i = 0; i < MR; ++i)
            ab[j * MR + i] = acc[j][i];
}

template <class T, class Acc>
void kernel_generic(index_t k, const T *__restrict a, const T *__restrict b, Acc *__restrict ab,
                    index_t mr, index_t nr) {
    std::fill_n(ab, mr * nr, Acc(0));
    for (index_t p = 0; p < k; ++p) {
        for (index_t j = 0; j < nr; ++j) {
            const Acc bj = Acc(b[j]);
            for (index_t i = 0; i < mr; ++i)
                ab[j * mr + i] = madd(Acc(a[i]), bj, ab[j * mr + i]);
        }
        a += mr;
        b += nr;
    }
}

template <class T, class Acc>
KernelFn<T, Acc> select_kernel(index_t mr, index_t nr) {
    if (mr == 8 && nr == 6)
        return kernel_fixed<T, Acc, 8, 6>;
    if (mr == 8 && nr == 4)
        return kernel_fixed<T, Acc, 8, 4>;
    if (mr == 4 && nr == 4)
        return kernel_fixed<T, Acc, 4, 4>;
    if (mr == 16 && nr == 6)
        return kernel_fixed<T, Acc, 16, 6>;
    if (mr == 6 && nr == 8)
        return kernel_fixed<T, Acc, 6, 8>;
    return kernel_generic<T, Acc>;
}

// ---------------------------------------------------------------------------
// Output tile update: c = beta*c + alpha*ab over the valid me x ne part, optionally masked to
// the lower triangle of the whole C (global row >= global column).
// ---------------------------------------------------------------------------

struct TileMask {
    bool lower     = false;
    bool read_c    = true;
    index_t row0   = 0; // global position of the tile
    index_t col0   = 0;
};

template <class T, class Acc>
inline void update_strided(T *c, index_t rs, index_t cs, index_t me, index_t ne, const Acc *ab,
                           index_t mr, Acc alpha, Acc beta, const TileMask &mask) {
    for (index_t j = 0; j < ne; ++j) {
        index_t i_begin = 0;
        if (mask.lower)
            i_begin = std::max<index_t>(0, mask.col0 + j - mask.row0);
        for (index_t i = i_begin; i < me; ++i) {
            T &cij  = c[i * rs + j * cs];
            Acc upd = alpha * ab[j * mr + i];
            cij     = mask.read_c ? T(beta * Acc(cij) + upd) : T(upd);
        }
    }
}

// ---------------------------------------------------------------------------
// Operand accessors
// ---------------------------------------------------------------------------

template <class T>
struct StridedA {
    const T *base;
    index_t rs, cs;

    void pack(T *buf, index_t i0, index_t mb, index_t p0, index_t kb, index_t mr) const {
        for (index_t q = 0; q < mb; q += mr) {
            index_t me = std::min(mr, mb - q);
            const T *src = base + (i0 + q) * rs + p0 * cs;
            for (index_t p = 0; p < kb; ++p) {
                T *dst       = buf + p * mr;
                const T *col = src + p * cs;
                for (index_t i = 0; i < me; ++i)
                    dst[i] = col[i * rs];
                for (index_t i = me; i < mr; ++i)
                    dst[i] = T(0);
            }
            buf += mr * kb;
        }
    }
};

/// B operand with an optional pack-time skew tridiagonal recombination of rows:
/// packed row p = t[p-1]*src(p-1,:) - t[p]*src(p+1,:), p a global row of the source.
template <class T>
struct StridedB {
    const T *base;
    index_t rs, cs;
    index_t rows = 0;           // full row count of the source (for transform bounds)
    const T *skew_t = nullptr;  // length rows-1 when set

    void pack(T *buf, index_t p0, index_t kb, index_t j0, index_t nb, index_t nr) const {
        for (index_t q = 0; q < nb; q += nr) {
            index_t ne = std::min(nr, nb - q);
            for (index_t p = 0; p < kb; ++p) {
                T *dst = buf + p * nr;
                index_t gp = p0 + p;
                if (!skew_t) {
                    const T *row = base + gp * rs + (j0 + q) * cs;
                    for (index_t j = 0; j < ne; ++j)
                        dst[j] = row[j * cs];
                } else {
                    const T *above = gp > 0 ? base + (gp - 1) * rs + (j0 + q) * cs : nullptr;
                    const T *below =
                        gp + 1 < rows ? base + (gp + 1) * rs + (j0 + q) * cs : nullptr;
                    T tl = above ? skew_t[gp - 1] : T(0);
                    T tr = below ? skew_t[gp] : T(0);
                    for (index_t j = 0; j < ne; ++j) {
                        T v = T(0);
                        if (above)
                            v = tl * above[j * cs];
                        if (below)
                            v = v - tr * below[j * cs];
                        dst[j] = v;
                    }
                }
                for (index_t j = ne; j < nr; ++j)
                    dst[j] = T(0);
            }
            buf += nr * kb;
        }
    }
};

template <class T>
struct StridedC {
    T *base;
    index_t rs, cs;

    template <class Acc>
    void update(index_t i0, index_t j0, index_t me, index_t ne, const Acc *ab, index_t mr,
                Acc alpha, Acc beta, TileMask mask) const {
        mask.row0 = i0;
        mask.col0 = j0;
        update_strided(base + i0 * rs + j0 * cs, rs, cs, me, ne, ab, mr, alpha, beta, mask);
    }
};

/// Scatter-indexed matrix facade: element (i, j) lives at base[rscat[i] + cscat[j]].
/// rbs / cbs summarize each mr-row / nr-column block: the common stride, or 0 if the block is
/// not an arithmetic progression.
template <class T>
struct Scatter {
    T *base;
    const index_t *rscat, *cscat;
    const index_t *rbs, *cbs;
    index_t rblock, cblock;
};

template <class T>
struct ScatterA {
    Scatter<const T> s;

    void pack(T *buf, index_t i0, index_t mb, index_t p0, index_t kb, index_t mr) const {
        for (index_t q = 0; q < mb; q += mr) {
            index_t me     = std::min(mr, mb - q);
            index_t stride = s.rbs[(i0 + q) / s.rblock];
            for (index_t p = 0; p < kb; ++p) {
                T *dst      = buf + p * mr;
                index_t col = s.cscat[p0 + p];
                if (stride != 0) {
                    const T *src = s.base + s.rscat[i0 + q] + col;
                    for (index_t i = 0; i < me; ++i)
                        dst[i] = src[i * stride];
                } else {
                    for (index_t i = 0; i < me; ++i)
                        dst[i] = s.base[s.rscat[i0 + q + i] + col];
                }
                for (index_t i = me; i < mr; ++i)
                    dst[i] = T(0);
            }
            buf += mr * kb;
        }
    }
};

template <class T>
struct ScatterB {
    Scatter<const T> s;

    void pack(T *buf, index_t p0, index_t kb, index_t j0, index_t nb, index_t nr) const {
        for (index_t q = 0; q < nb; q += nr) {
            index_t ne     = std::min(nr, nb - q);
            index_t stride = s.cbs[(j0 + q) / s.cblock];
            for (index_t p = 0; p < kb; ++p) {
                T *dst      = buf + p * nr;
                index_t row = s.rscat[p0 + p];
                if (stride != 0) {
                    const T *src = s.base + row + s.cscat[j0 + q];
                    for (index_t j = 0; j < ne; ++j)
                        dst[j] = src[j * stride];
                } else {
                    for (index_t j = 0; j < ne; ++j)
                        dst[j] = s.base[row + s.cscat[j0 + q + j]];
                }
                for (index_t j = ne; j < nr; ++j)
                    dst[j] = T(0);
            }
            buf += nr * kb;
        }
    }
};

template <class T>
struct ScatterC {
    Scatter<T> s;

    template <class Acc>
    void update(index_t i0, index_t j0, index_t me, index_t ne, const Acc *ab, index_t mr,
                Acc alpha, Acc beta, TileMask mask) const {
        mask.row0  = i0;
        mask.col0  = j0;
        index_t rb = s.rbs[i0 / s.rblock], cb = s.cbs[j0 / s.cblock];
        if (rb != 0 && cb != 0) {
            update_strided(s.base + s.rscat[i0] + s.cscat[j0], rb, cb, me, ne, ab, mr, alpha,
                           beta, mask);
            return;
        }
        for (index_t j = 0; j < ne; ++j) {
            index_t i_begin = mask.lower ? std::max<index_t>(0, j0 + j - i0) : 0;
            for (index_t i = i_begin; i < me; ++i) {
                T &cij  = s.base[s.rscat[i0 + i] + s.cscat[j0 + j]];
                Acc upd = alpha * ab[j * mr + i];
                cij     = mask.read_c ? T(beta * Acc(cij) + upd) : T(upd);
            }
        }
    }
};

// ---------------------------------------------------------------------------
// The five loops
// ---------------------------------------------------------------------------

/// C(m x n) := beta*C + alpha*A(m x k)*B(k x n), restricted to the lower triangle when `lower`.
/// Requires m, n, k >= 1. Parallelism splits the ic loop: worker w handles ic blocks
/// w, w+ways, ...; each micro-tile has exactly one writer and a fixed k order, so the result
/// does not depend on `ways`.
template <class T, class Acc, class AOp, class BOp, class COp>
void five_loops(index_t m, index_t n, index_t k, double alpha, const AOp &a, const BOp &b,
                double beta, const COp &c, const KernelConfig &cfg, int ways, bool lower) {
    const index_t mr = cfg.mr, nr = cfg.nr, mc = cfg.mc, kc = cfg.kc, nc = cfg.nc;
    const auto kernel = select_kernel<T, Acc>(mr, nr);

    const index_t kc_eff = std::min(kc, k);
    const index_t mc_eff = std::min(mc, round_up(m, mr));
    const index_t nc_eff = std::min(nc, round_up(n, nr));
    const index_t n_ic   = ceil_div(m, mc);
    ways                 = int(std::clamp<index_t>(ways, 1, n_ic));

    PackBuffer<T> b_pack(std::size_t(kc_eff * nc_eff));
    std::vector<PackBuffer<T>> a_packs;
    a_packs.reserve(std::size_t(ways));
    for (int w = 0; w < ways; ++w)
        a_packs.emplace_back(std::size_t(mc_eff * kc_eff));

    const Acc alpha_acc = Acc(T(alpha));
    const Acc beta_acc  = Acc(T(beta));

    run_team(ways, [&](int id, auto sync) {
        std::array<Acc, max_micro_tile * max_micro_tile> ab;
        T *a_pack = a_packs[std::size_t(id)].data();
        for (index_t jc = 0; jc < n; jc += nc) {
            const index_t nb = std::min(nc, n - jc);
            if (lower && jc >= m)
                break;
            for (index_t pc = 0; pc < k; pc += kc) {
                const index_t kb = std::min(kc, k - pc);
                TileMask mask;
                mask.lower  = lower;
                mask.read_c = !(pc == 0 && beta == 0.0);
                const Acc beta_eff = pc == 0 ? beta_acc : Acc(1);

                if (id == 0)
                    b.pack(b_pack.data(), pc, kb, jc, nb, nr);
                sync();
                for (index_t blk = id; blk < n_ic; blk += ways) {
                    const index_t ic = blk * mc;
                    const index_t mb = std::min(mc, m - ic);
                    if (lower && ic + mb - 1 < jc)
                        continue;
                    a.pack(a_pack, ic, mb, pc, kb, mr);
                    for (index_t jr = 0; jr < nb; jr += nr) {
                        const index_t ne = std::min(nr, nb - jr);
                        const T *bp      = b_pack.data() + (jr / nr) * nr * kb;
                        for (index_t ir = 0; ir < mb; ir += mr) {
                            const index_t me = std::min(mr, mb - ir);
                            const index_t gi = ic + ir, gj = jc + jr;
                            if (lower && gi + me - 1 < gj)
                                continue;
                            kernel(kb, a_pack + (ir / mr) * mr * kb, bp, ab.data(), mr, nr);
                            c.update(gi, gj, me, ne, ab.data(), mr, alpha_acc, beta_eff, mask);
                        }
                    }
                }
                sync();
            }
        }
    });
}

/// C := beta*C over the (optionally lower) part of C; beta == 0 overwrites with zeros.
template <class T>
void scale_strided(T *c, index_t m, index_t n, index_t rs, index_t cs, double beta, bool lower) {
    if (beta == 1.0)
        return;
    for (index_t i = 0; i < m; ++i)
        for (index_t j = 0; j < (lower ? std::min(i + 1, n) : n); ++j) {
            T &x = c[i * rs + j * cs];
            x    = beta == 0.0 ? T(0) : T(T(beta) * x);
        }
}

} // namespace famlies::engine::detail
