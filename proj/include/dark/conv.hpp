// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "dark/kernels.hpp"
#include "dark/tape.hpp"
#include "dark/tensor.hpp"

namespace dark {

// Zero-fill padding; output extents follow (in + 2*pad - k) / stride + 1.
struct ConvSpec {
    std::int64_t kh = 1;
    std::int64_t kw = 1;
    std::int64_t stride = 1;
    std::int64_t pad = 0;
    std::int64_t groups = 1;
    std::int64_t in_channels = 0;
    std::int64_t out_channels = 0;
    bool has_bias = true;

    std::int64_t group_in() const { return in_channels / groups; }
    std::int64_t group_out() const { return out_channels / groups; }
    std::int64_t kernel_len() const { return group_in() * kh * kw; }
};

namespace detail {

template <typename T>
void conv_validate(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b,
                   const ConvSpec& s) {
    DARK_CHECK(s.kh >= 1 && s.kw >= 1 && s.stride >= 1 && s.pad >= 0,
               "conv2d: invalid kernel geometry kh=" << s.kh << " kw=" << s.kw
                   << " stride=" << s.stride << " pad=" << s.pad);
    DARK_CHECK(s.groups >= 1 && s.in_channels % s.groups == 0,
               "conv2d: groups " << s.groups << " does not divide in_channels "
                                 << s.in_channels);
    DARK_CHECK(s.out_channels % s.groups == 0,
               "conv2d: groups " << s.groups << " does not divide out_channels "
                                 << s.out_channels);
    DARK_CHECK(x.shape().c == s.in_channels,
               "conv2d: input has " << x.shape().c
                                    << " channels, spec.in_channels is "
                                    << s.in_channels);
    const Shape want_w{s.out_channels, s.group_in(), s.kh, s.kw};
    DARK_CHECK(w.shape() == want_w, "conv2d: weight shape "
                                        << w.shape().str() << ", expected "
                                        << want_w.str());
    if (b) {
        const Shape want_b{1, s.out_channels, 1, 1};
        DARK_CHECK(b->shape() == want_b, "conv2d: bias shape "
                                             << b->shape().str()
                                             << ", expected " << want_b.str());
    }
}

template <typename T>
Shape conv_out_shape(const Shape& in, const ConvSpec& s) {
    const std::int64_t oh = (in.h + 2 * s.pad - s.kh) / s.stride + 1;
    const std::int64_t ow = (in.w + 2 * s.pad - s.kw) / s.stride + 1;
    DARK_CHECK(oh >= 1 && ow >= 1,
               "conv2d: kernel " << s.kh << "x" << s.kw << " with pad " << s.pad
                                 << " does not fit input " << in.str());
    return Shape{in.n, s.out_channels, oh, ow};
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b,
                       const ConvSpec& s) {
    conv_validate(x, w, b, s);
    const Shape in = x.shape();
    const Shape os = conv_out_shape<T>(in, s);
    Tensor<T> y(os);

    ConvDims d;
    d.in_h = in.h;
    d.in_w = in.w;
    d.kh = s.kh;
    d.kw = s.kw;
    d.stride = s.stride;
    d.pad = s.pad;
    d.out_h = os.h;
    d.out_w = os.w;
    d.cg = s.group_in();

    const std::int64_t cg = s.group_in(), ocg = s.group_out();
    const std::int64_t K = s.kernel_len();
    const std::int64_t np = os.h * os.w;
    const std::int64_t in_plane = in.h * in.w;
    const bool direct = s.kh == 1 && s.kw == 1 && s.stride == 1 && s.pad == 0;
    const std::int64_t strip = conv_strip_pixels(K, np, sizeof(T));
    const std::int64_t nstrips = (np + strip - 1) / strip;
    const std::int64_t tasks = in.n * s.groups * nstrips;

    const T* xp = x.data();
    const T* wp = w.data();
    const T* bp = b ? b->data() : nullptr;
    T* yp = y.mutable_data();

    parallel_for(tasks, 1, [&](std::int64_t t0, std::int64_t t1) {
        std::vector<T> col;
        if (!direct) col.resize(static_cast<std::size_t>(K) * strip);
        for (std::int64_t t = t0; t < t1; ++t) {
            const std::int64_t i = t / (s.groups * nstrips);
            const std::int64_t g = (t / nstrips) % s.groups;
            const std::int64_t st = t % nstrips;
            const std::int64_t p0 = st * strip;
            const std::int64_t p1 = std::min(np, p0 + strip);
            const T* xg = xp + (i * in.c + g * cg) * in_plane;
            T* yg = yp + (i * os.c + g * ocg) * np;
            const T* A = wp + g * ocg * K;
            const T* bias = bp ? bp + g * ocg : nullptr;
            if (direct) {
                gemm_cols(A, K, xg, in_plane, yg, np, ocg, K, p0, p1, bias,
                          false);
            } else {
                im2col_strip(xg, d, p0, p1, col.data());
                gemm_cols(A, K, col.data(), p1 - p0, yg + p0, np, ocg, K,
                          std::int64_t(0), p1 - p0, bias, false);
            }
        }
    });
    return y;
}

// dL/dx as a convolution of the stride-dilated, edge-padded output gradient
// with the spatially flipped, channel-swapped weights. Falls back to a direct
// gather when the padding exceeds the kernel (never the case in this model).
template <typename T>
Tensor<T> conv_backward_input(const Tensor<T>& dy, const Tensor<T>& w,
                              const ConvSpec& s, const Shape& in_shape) {
    const Shape ds = dy.shape();
    const std::int64_t cg = s.group_in(), ocg = s.group_out();
    const std::int64_t peh = s.kh - 1 - s.pad;
    const std::int64_t pew = s.kw - 1 - s.pad;

    if (peh < 0 || pew < 0) {
        Tensor<T> dx(in_shape);
        const std::int64_t planes = in_shape.n * in_shape.c;
        parallel_for(planes, 1, [&](std::int64_t a, std::int64_t b2) {
            for (std::int64_t pl = a; pl < b2; ++pl) {
                const std::int64_t n = pl / in_shape.c;
                const std::int64_t ci = pl % in_shape.c;
                const std::int64_t g = ci / cg;
                T* out = dx.mutable_data() + pl * in_shape.h * in_shape.w;
                for (std::int64_t y = 0; y < in_shape.h; ++y)
                    for (std::int64_t x = 0; x < in_shape.w; ++x) {
                        T acc = T(0);
                        for (std::int64_t co = 0; co < ocg; ++co)
                            for (std::int64_t i = 0; i < s.kh; ++i) {
                                const std::int64_t ny = y + s.pad - i;
                                if (ny < 0 || ny % s.stride) continue;
                                const std::int64_t oy = ny / s.stride;
                                if (oy >= ds.h) continue;
                                for (std::int64_t j = 0; j < s.kw; ++j) {
                                    const std::int64_t nx = x + s.pad - j;
                                    if (nx < 0 || nx % s.stride) continue;
                                    const std::int64_t ox = nx / s.stride;
                                    if (ox >= ds.w) continue;
                                    acc += dy.at(n, g * ocg + co, oy, ox) *
                                           w.at(g * ocg + co, ci - g * cg, i, j);
                                }
                            }
                        out[y * in_shape.w + x] = acc;
                    }
            }
        });
        return dx;
    }

    // Flip kernel and swap the channel roles within each group.
    Tensor<T> wt(Shape{s.in_channels, ocg, s.kh, s.kw});
    for (std::int64_t g = 0; g < s.groups; ++g)
        for (std::int64_t ci = 0; ci < cg; ++ci)
            for (std::int64_t co = 0; co < ocg; ++co)
                for (std::int64_t i = 0; i < s.kh; ++i)
                    for (std::int64_t j = 0; j < s.kw; ++j)
                        wt.at(g * cg + ci, co, i, j) =
                            w.at(g * ocg + co, ci, s.kh - 1 - i, s.kw - 1 - j);

    ConvSpec bs;
    bs.kh = s.kh;
    bs.kw = s.kw;
    bs.stride = 1;
    bs.pad = 0;
    bs.groups = s.groups;
    bs.in_channels = s.out_channels;
    bs.out_channels = s.in_channels;
    bs.has_bias = false;

    Tensor<T> dx_core = [&] {
        if (s.stride == 1 && peh == 0 && pew == 0)
            return conv_forward(dy, wt, static_cast<const Tensor<T>*>(nullptr), bs);
        const std::int64_t th = (ds.h - 1) * s.stride + 1 + 2 * peh;
        const std::int64_t tw = (ds.w - 1) * s.stride + 1 + 2 * pew;
        Tensor<T> buf(Shape{ds.n, ds.c, th, tw});
        parallel_for(ds.n * ds.c, 1, [&](std::int64_t a, std::int64_t b2) {
            for (std::int64_t pl = a; pl < b2; ++pl) {
                const T* src = dy.data() + pl * ds.h * ds.w;
                T* dst = buf.mutable_data() + pl * th * tw;
                for (std::int64_t oy = 0; oy < ds.h; ++oy)
                    for (std::int64_t ox = 0; ox < ds.w; ++ox)
                        dst[(oy * s.stride + peh) * tw + ox * s.stride + pew] =
                            src[oy * ds.w + ox];
            }
        });
        return conv_forward(buf, wt, static_cast<const Tensor<T>*>(nullptr), bs);
    }();

    if (dx_core.shape() == in_shape) return dx_core;
    // Floor-division output sizing can leave an unused fringe; its grad is 0.
    Tensor<T> dx(in_shape);
    const Shape cs = dx_core.shape();
    parallel_for(in_shape.n * in_shape.c, 1, [&](std::int64_t a, std::int64_t b2) {
        for (std::int64_t pl = a; pl < b2; ++pl) {
            const T* src = dx_core.data() + pl * cs.h * cs.w;
            T* dst = dx.mutable_data() + pl * in_shape.h * in_shape.w;
            for (std::int64_t y = 0; y < cs.h; ++y)
                for (std::int64_t x = 0; x < cs.w; ++x)
                    dst[y * in_shape.w + x] = src[y * cs.w + x];
        }
    });
    return dx;
}

template <typename T>
Tensor<T> conv_backward_weight(const Tensor<T>& dy, const Tensor<T>& x,
                               const ConvSpec& s) {
    const Shape in = x.shape();
    const Shape ds = dy.shape();
    ConvDims d;
    d.in_h = in.h;
    d.in_w = in.w;
    d.kh = s.kh;
    d.kw = s.kw;
    d.stride = s.stride;
    d.pad = s.pad;
    d.out_h = ds.h;
    d.out_w = ds.w;
    d.cg = s.group_in();

    const std::int64_t cg = s.group_in(), ocg = s.group_out();
    const std::int64_t K = s.kernel_len();
    const std::int64_t np = ds.h * ds.w;
    const std::int64_t in_plane = in.h * in.w;
    const std::int64_t strip = conv_strip_pixels(K, np, sizeof(T));
    const std::int64_t nstrips = (np + strip - 1) / strip;
    const std::int64_t tasks = in.n * s.groups * nstrips;

    // One product per (image, group, strip); combined afterwards in a fixed
    // order so the result does not depend on scheduling.
    std::vector<T> partial(static_cast<std::size_t>(tasks) * ocg * K);
    parallel_for(tasks, 1, [&](std::int64_t t0, std::int64_t t1) {
        std::vector<T> colT(static_cast<std::size_t>(strip) * K);
        for (std::int64_t t = t0; t < t1; ++t) {
            const std::int64_t i = t / (s.groups * nstrips);
            const std::int64_t g = (t / nstrips) % s.groups;
            const std::int64_t st = t % nstrips;
            const std::int64_t p0 = st * strip;
            const std::int64_t p1 = std::min(np, p0 + strip);
            const T* xg = x.data() + (i * in.c + g * cg) * in_plane;
            const T* dyg = dy.data() + (i * ds.c + g * ocg) * np;
            im2colT_strip(xg, d, p0, p1, colT.data());
            gemm_cols(dyg + p0, np, colT.data(), K, partial.data() + t * ocg * K,
                      K, ocg, p1 - p0, std::int64_t(0), K, static_cast<const T*>(nullptr), false);
        }
    });

    Tensor<T> dw(Shape{s.out_channels, cg, s.kh, s.kw});
    parallel_for(s.out_channels, 1, [&](std::int64_t a, std::int64_t b2) {
        for (std::int64_t oc = a; oc < b2; ++oc) {
            const std::int64_t g = oc / ocg;
            const std::int64_t m = oc % ocg;
            T* row = dw.mutable_data() + oc * K;
            for (std::int64_t i = 0; i < in.n; ++i)
                for (std::int64_t st = 0; st < nstrips; ++st) {
                    const std::int64_t t = (i * s.groups + g) * nstrips + st;
                    const T* src = partial.data() + (t * ocg + m) * K;
                    for (std::int64_t k = 0; k < K; ++k) row[k] += src[k];
                }
        }
    });
    return dw;
}

template <typename T>
Tensor<T> conv_backward_bias(const Tensor<T>& dy) {
    const Shape ds = dy.shape();
    Tensor<T> db(Shape{1, ds.c, 1, 1});
    parallel_for(ds.c, 1, [&](std::int64_t a, std::int64_t b2) {
        for (std::int64_t c = a; c < b2; ++c) {
            double acc = 0.0;
            for (std::int64_t n = 0; n < ds.n; ++n) {
                const T* plane = dy.data() + (n * ds.c + c) * ds.h * ds.w;
                for (std::int64_t p = 0; p < ds.h * ds.w; ++p)
                    acc += static_cast<double>(plane[p]);
            }
            db.mutable_data()[c] = static_cast<T>(acc);
        }
    });
    return db;
}

} // namespace detail

// 2-D convolution, differentiable w.r.t. input, weight, and bias.
template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& w,
                 const Tensor<T>* b, const ConvSpec& spec) {
    if (b && !spec.has_bias)
        throw Error("conv2d: bias tensor given but spec.has_bias is false");
    Tensor<T> y = detail::conv_forward(x, w, spec.has_bias ? b : nullptr, spec);
    if (!tape) return y;
    const bool need_x = tape->wants(x);
    const bool need_w = tape->wants(w);
    const bool need_b = b && spec.has_bias && tape->wants(*b);
    if (!need_x && !need_w && !need_b) return y;

    const std::uint64_t yid = y.id();
    const Shape in_shape = x.shape();
    Tensor<T> bcopy = need_b ? *b : Tensor<T>();
    auto backward = [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        if (need_x) {
            Tensor<T> dx = detail::conv_backward_input(*gy, w, spec, in_shape);
            t.accumulate(x.id(), in_shape, dx.vec());
        }
        if (need_w) {
            Tensor<T> dw = detail::conv_backward_weight(*gy, x, spec);
            t.accumulate(w.id(), w.shape(), dw.vec());
        }
        if (need_b) {
            Tensor<T> db = detail::conv_backward_bias(*gy);
            t.accumulate(bcopy.id(), bcopy.shape(), db.vec());
        }
    };
    if (b)
        tape->record(y, backward, x, w, *b);
    else
        tape->record(y, backward, x, w);
    return y;
}

} // namespace dark
