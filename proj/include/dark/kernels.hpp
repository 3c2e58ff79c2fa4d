// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <type_traits>
#include <vector>

#include "dark/common.hpp"

// Raw compute kernels behind the tensor ops. The convolution GEMM packs its
// right-hand side into K x NR panels so the inner loop streams memory
// linearly; parallel callers hand each invocation a disjoint output slice.

namespace dark {
namespace detail {

#if defined(__GNUC__) && (defined(__AVX512F__) || defined(__AVX__))
#define DARK_HAVE_VEC_KERNEL 1
#if defined(__AVX512F__)
typedef float vfloat __attribute__((vector_size(64)));
#else
typedef float vfloat __attribute__((vector_size(32)));
#endif
constexpr std::int64_t kVecLanes = sizeof(vfloat) / sizeof(float);

inline vfloat vload(const float* p) {
    vfloat v;
    __builtin_memcpy(&v, p, sizeof(v));
    return v;
}
inline void vstore(float* p, vfloat v) { __builtin_memcpy(p, &v, sizeof(v)); }
#endif

template <typename T>
constexpr std::int64_t panel_width() {
#if DARK_HAVE_VEC_KERNEL
    if (std::is_same_v<T, float>) return 2 * kVecLanes;
#endif
    return 16;
}

#if DARK_HAVE_VEC_KERNEL
// 4 x (2*lanes) tile; accumulators stay in vector registers across the whole
// K loop. The panel rows (length NR) are contiguous.
inline void gemm_tile4_f32(const float* a0, const float* a1, const float* a2,
                           const float* a3, const float* panel, std::int64_t K,
                           float* c0, float* c1, float* c2, float* c3,
                           const float* bias4, bool accumulate) {
    vfloat acc00{}, acc01{}, acc10{}, acc11{}, acc20{}, acc21{}, acc30{},
        acc31{};
    for (std::int64_t k = 0; k < K; ++k) {
        const float* bk = panel + 2 * kVecLanes * k;
        const vfloat b0 = vload(bk);
        const vfloat b1 = vload(bk + kVecLanes);
        acc00 += b0 * a0[k];
        acc01 += b1 * a0[k];
        acc10 += b0 * a1[k];
        acc11 += b1 * a1[k];
        acc20 += b0 * a2[k];
        acc21 += b1 * a2[k];
        acc30 += b0 * a3[k];
        acc31 += b1 * a3[k];
    }
    float* crow[4] = {c0, c1, c2, c3};
    const vfloat lo[4] = {acc00, acc10, acc20, acc30};
    const vfloat hi[4] = {acc01, acc11, acc21, acc31};
    for (int r = 0; r < 4; ++r) {
        if (accumulate) {
            vstore(crow[r], vload(crow[r]) + lo[r]);
            vstore(crow[r] + kVecLanes, vload(crow[r] + kVecLanes) + hi[r]);
        } else {
            const float add = bias4 ? bias4[r] : 0.0f;
            vstore(crow[r], lo[r] + add);
            vstore(crow[r] + kVecLanes, hi[r] + add);
        }
    }
}
#endif // DARK_HAVE_VEC_KERNEL

// C[M x ncols] (row stride ldc) = A[M x K] (row stride lda) times a packed
// panel matrix; optionally C += or a per-row bias is added. Panels hold NR
// consecutive columns in K-major contiguous order, zero-padded at the tail.
template <typename T>
void gemm_panels(const T* A, std::int64_t lda, const T* panels, T* C,
                 std::int64_t ldc, std::int64_t M, std::int64_t K,
                 std::int64_t ncols, const T* bias, bool accumulate) {
    constexpr std::int64_t NR = panel_width<T>();
    const std::int64_t npanels = (ncols + NR - 1) / NR;
    T acc[4][NR];

    // Panels outermost: each packed block is consumed by every row tile while
    // it is still cache-resident.
    for (std::int64_t q = 0; q < npanels; ++q) {
        const T* panel = panels + q * K * NR;
        const std::int64_t nb = q * NR;
        const std::int64_t nn = std::min(NR, ncols - nb);
        for (std::int64_t m0 = 0; m0 < M; m0 += 4) {
            const std::int64_t mb = std::min<std::int64_t>(4, M - m0);

#if DARK_HAVE_VEC_KERNEL
            if constexpr (std::is_same_v<T, float>) {
                if (mb == 4 && nn == NR) {
                    float bias4[4];
                    if (bias)
                        for (int r = 0; r < 4; ++r) bias4[r] = bias[m0 + r];
                    gemm_tile4_f32(A + (m0 + 0) * lda, A + (m0 + 1) * lda,
                                   A + (m0 + 2) * lda, A + (m0 + 3) * lda,
                                   panel, K, C + (m0 + 0) * ldc + nb,
                                   C + (m0 + 1) * ldc + nb,
                                   C + (m0 + 2) * ldc + nb,
                                   C + (m0 + 3) * ldc + nb,
                                   bias ? bias4 : nullptr, accumulate);
                    continue;
                }
            }
#endif
            for (std::int64_t r = 0; r < mb; ++r) {
                T* arow = acc[r];
                for (std::int64_t j = 0; j < NR; ++j) arow[j] = T(0);
                const T* ar = A + (m0 + r) * lda;
                for (std::int64_t k = 0; k < K; ++k) {
                    const T w = ar[k];
                    const T* __restrict bk = panel + k * NR;
                    for (std::int64_t j = 0; j < NR; ++j) arow[j] += w * bk[j];
                }
                T* crow = C + (m0 + r) * ldc + nb;
                const T add = bias ? bias[m0 + r] : T(0);
                if (accumulate)
                    for (std::int64_t j = 0; j < nn; ++j) crow[j] += arow[j];
                else
                    for (std::int64_t j = 0; j < nn; ++j)
                        crow[j] = arow[j] + add;
            }
        }
    }
}

struct ConvDims {
    std::int64_t in_h = 0, in_w = 0;
    std::int64_t kh = 0, kw = 0;
    std::int64_t stride = 1, pad = 0;
    std::int64_t out_h = 0, out_w = 0;
    std::int64_t cg = 0; // input channels per group
};

inline std::int64_t panel_count(std::int64_t ncols, std::int64_t nr) {
    return (ncols + nr - 1) / nr;
}

// Packs image patches for output pixels [p0, p1) of one image/group into
// panel layout. Row k = (c * kh + i) * kw + j of the implicit patch matrix.
template <typename T>
void im2col_panels(const T* x, const ConvDims& d, std::int64_t p0,
                   std::int64_t p1, T* out) {
    constexpr std::int64_t NR = panel_width<T>();
    const std::int64_t len = p1 - p0;
    const std::int64_t K = d.cg * d.kh * d.kw;
    const std::int64_t plane = d.in_h * d.in_w;
    for (std::int64_t q = 0; q < panel_count(len, NR); ++q) {
        const std::int64_t pw = std::min(NR, len - q * NR);
        T* dst_panel = out + q * K * NR;
        std::int64_t row = 0;
        for (std::int64_t c = 0; c < d.cg; ++c) {
            const T* xc = x + c * plane;
            for (std::int64_t i = 0; i < d.kh; ++i) {
                for (std::int64_t j = 0; j < d.kw; ++j, ++row) {
                    T* dst = dst_panel + row * NR;
                    for (std::int64_t jj = 0; jj < pw; ++jj) {
                        const std::int64_t p = p0 + q * NR + jj;
                        const std::int64_t oy = p / d.out_w;
                        const std::int64_t ox = p - oy * d.out_w;
                        const std::int64_t y = oy * d.stride + i - d.pad;
                        const std::int64_t xp = ox * d.stride + j - d.pad;
                        dst[jj] =
                            (y < 0 || y >= d.in_h || xp < 0 || xp >= d.in_w)
                                ? T(0)
                                : xc[y * d.in_w + xp];
                    }
                    for (std::int64_t jj = pw; jj < NR; ++jj) dst[jj] = T(0);
                }
            }
        }
    }
}

// Panel packing of a plain K x N row-major matrix (the 1x1-conv fast path).
template <typename T>
void pack_panels(const T* B, std::int64_t ldb, std::int64_t K, std::int64_t p0,
                 std::int64_t p1, T* out) {
    constexpr std::int64_t NR = panel_width<T>();
    const std::int64_t len = p1 - p0;
    for (std::int64_t q = 0; q < panel_count(len, NR); ++q) {
        const std::int64_t pw = std::min(NR, len - q * NR);
        T* dst_panel = out + q * K * NR;
        for (std::int64_t k = 0; k < K; ++k) {
            const T* src = B + k * ldb + p0 + q * NR;
            T* dst = dst_panel + k * NR;
            for (std::int64_t jj = 0; jj < pw; ++jj) dst[jj] = src[jj];
            for (std::int64_t jj = pw; jj < NR; ++jj) dst[jj] = T(0);
        }
    }
}

// Transposed patch layout: one row per output pixel. Feeds the
// weight-gradient product, which contracts over pixels.
template <typename T>
void im2colT_strip(const T* x, const ConvDims& d, std::int64_t p0,
                   std::int64_t p1, T* colT) {
    const std::int64_t kcount = d.cg * d.kh * d.kw;
    const std::int64_t plane = d.in_h * d.in_w;
    for (std::int64_t p = p0; p < p1; ++p) {
        const std::int64_t oy = p / d.out_w;
        const std::int64_t ox = p - oy * d.out_w;
        T* out = colT + (p - p0) * kcount;
        std::int64_t row = 0;
        for (std::int64_t c = 0; c < d.cg; ++c) {
            const T* xc = x + c * plane;
            for (std::int64_t i = 0; i < d.kh; ++i) {
                const std::int64_t y = oy * d.stride + i - d.pad;
                for (std::int64_t j = 0; j < d.kw; ++j, ++row) {
                    const std::int64_t xp = ox * d.stride + j - d.pad;
                    out[row] =
                        (y < 0 || y >= d.in_h || xp < 0 || xp >= d.in_w)
                            ? T(0)
                            : xc[y * d.in_w + xp];
                }
            }
        }
    }
}

// Plain column-strip gemm used by the weight-gradient product:
// C[M x K] (+)= A[M x len] * B[len x K]; B rows are short and contiguous.
template <typename T>
void gemm_cols(const T* A, std::int64_t lda, const T* B, std::int64_t ldb,
               T* C, std::int64_t ldc, std::int64_t M, std::int64_t K,
               std::int64_t n0, std::int64_t n1, const T* bias,
               bool accumulate) {
    constexpr std::int64_t MR = 4;
    constexpr std::int64_t NR = 32;
    T acc[MR][NR];
    for (std::int64_t m0 = 0; m0 < M; m0 += MR) {
        const std::int64_t mb = std::min(MR, M - m0);
        for (std::int64_t nb = n0; nb < n1; nb += NR) {
            const std::int64_t nn = std::min(NR, n1 - nb);
            for (std::int64_t r = 0; r < mb; ++r) {
                T* arow = acc[r];
                for (std::int64_t j = 0; j < nn; ++j) arow[j] = T(0);
                const T* ar = A + (m0 + r) * lda;
                for (std::int64_t k = 0; k < K; ++k) {
                    const T w = ar[k];
                    const T* __restrict bk = B + k * ldb + nb;
                    for (std::int64_t j = 0; j < nn; ++j) arow[j] += w * bk[j];
                }
                T* crow = C + (m0 + r) * ldc + nb;
                const T add = bias ? bias[m0 + r] : T(0);
                if (accumulate)
                    for (std::int64_t j = 0; j < nn; ++j) crow[j] += arow[j];
                else
                    for (std::int64_t j = 0; j < nn; ++j)
                        crow[j] = arow[j] + add;
            }
        }
    }
}

// Strip width so one packed patch buffer stays cache-friendly. Depends only
// on the problem shape, keeping parallel partitions reproducible.
inline std::int64_t conv_strip_pixels(std::int64_t kcount,
                                      std::int64_t total_px,
                                      std::int64_t elem_size) {
    const std::int64_t budget = std::int64_t(1) << 20; // 1 MiB
    std::int64_t strip = budget / std::max<std::int64_t>(1, kcount * elem_size);
    strip = std::clamp<std::int64_t>(strip, 128, 16384);
    return std::min(strip, total_px);
}

} // namespace detail
} // namespace dark
