// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dark/tape.hpp"
#include "dark/tensor.hpp"

namespace dark {

namespace detail {
constexpr std::int64_t kElemGrain = 1 << 15;

template <typename T, typename Fn>
void for_each(std::int64_t n, Fn&& fn) {
    parallel_for(n, kElemGrain, [&](std::int64_t a, std::int64_t b) {
        for (std::int64_t i = a; i < b; ++i) fn(i);
    });
}
} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops. Operands must have equal shapes, or the second may
// be (N,C,1,1) (broadcast over space) or (N,1,H,W) (broadcast over channels).

enum class Broadcast { none, spatial, channel };

namespace detail {

template <typename T>
Broadcast broadcast_kind(const Shape& a, const Shape& b, const char* op) {
    if (a == b) return Broadcast::none;
    if (b.n == a.n && b.c == a.c && b.h == 1 && b.w == 1)
        return Broadcast::spatial;
    if (b.n == a.n && b.c == 1 && b.h == a.h && b.w == a.w)
        return Broadcast::channel;
    throw Error(std::string(op) + ": incompatible shapes " + a.str() + " and " +
                b.str());
}

template <typename T>
std::int64_t broadcast_index(const Shape& s, Broadcast kind, std::int64_t i) {
    const std::int64_t hw = s.h * s.w;
    switch (kind) {
    case Broadcast::none:
        return i;
    case Broadcast::spatial:
        return i / hw; // (n*C + c)
    case Broadcast::channel: {
        const std::int64_t n = i / (s.c * hw);
        return n * hw + i % hw;
    }
    }
    return i;
}

// Sums a full-shape gradient down to the broadcast operand's shape.
template <typename T>
Tensor<T> reduce_to(const Tensor<T>& g, const Shape& full, Broadcast kind,
                    const Shape& small) {
    if (kind == Broadcast::none) return g;
    Tensor<T> out(small);
    const std::int64_t hw = full.h * full.w;
    if (kind == Broadcast::spatial) {
        parallel_for(full.n * full.c, 1, [&](std::int64_t a, std::int64_t b) {
            for (std::int64_t p = a; p < b; ++p) {
                const T* src = g.data() + p * hw;
                double acc = 0.0;
                for (std::int64_t i = 0; i < hw; ++i)
                    acc += static_cast<double>(src[i]);
                out.mutable_data()[p] = static_cast<T>(acc);
            }
        });
    } else {
        parallel_for(full.n, 1, [&](std::int64_t a, std::int64_t b) {
            for (std::int64_t n = a; n < b; ++n) {
                T* dst = out.mutable_data() + n * hw;
                for (std::int64_t i = 0; i < hw; ++i) dst[i] = T(0);
                for (std::int64_t c = 0; c < full.c; ++c) {
                    const T* src = g.data() + (n * full.c + c) * hw;
                    for (std::int64_t i = 0; i < hw; ++i) dst[i] += src[i];
                }
            }
        });
    }
    return out;
}

template <typename T, typename Fwd>
Tensor<T> binary_forward(const Tensor<T>& a, const Tensor<T>& b, Broadcast kind,
                         Fwd&& fwd) {
    Tensor<T> y(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* py = y.mutable_data();
    const Shape as = a.shape();
    for_each<T>(a.numel(), [&](std::int64_t i) {
        py[i] = fwd(pa[i], pb[broadcast_index<T>(as, kind, i)]);
    });
    return y;
}

} // namespace detail

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    const Broadcast kind = detail::broadcast_kind<T>(a.shape(), b.shape(), "add");
    Tensor<T> y = detail::binary_forward(a, b, kind,
                                         [](T x, T z) { return x + z; });
    if (!tape || (!tape->wants(a) && !tape->wants(b))) return y;
    const std::uint64_t yid = y.id();
    const bool na = tape->wants(a), nb = tape->wants(b);
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        if (na) t.accumulate(a.id(), a.shape(), gy->vec());
        if (nb) {
            Tensor<T> gb = detail::reduce_to(*gy, a.shape(), kind, b.shape());
            t.accumulate(b.id(), b.shape(), gb.vec());
        }
    }, a, b);
    return y;
}

template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    const Broadcast kind = detail::broadcast_kind<T>(a.shape(), b.shape(), "sub");
    Tensor<T> y = detail::binary_forward(a, b, kind,
                                         [](T x, T z) { return x - z; });
    if (!tape || (!tape->wants(a) && !tape->wants(b))) return y;
    const std::uint64_t yid = y.id();
    const bool na = tape->wants(a), nb = tape->wants(b);
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        if (na) t.accumulate(a.id(), a.shape(), gy->vec());
        if (nb) {
            Tensor<T> neg(gy->shape());
            const T* src = gy->data();
            T* dst = neg.mutable_data();
            detail::for_each<T>(neg.numel(),
                                [&](std::int64_t i) { dst[i] = -src[i]; });
            Tensor<T> gb = detail::reduce_to(neg, a.shape(), kind, b.shape());
            t.accumulate(b.id(), b.shape(), gb.vec());
        }
    }, a, b);
    return y;
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
    const Broadcast kind = detail::broadcast_kind<T>(a.shape(), b.shape(), "mul");
    Tensor<T> y = detail::binary_forward(a, b, kind,
                                         [](T x, T z) { return x * z; });
    if (!tape || (!tape->wants(a) && !tape->wants(b))) return y;
    const std::uint64_t yid = y.id();
    const bool na = tape->wants(a), nb = tape->wants(b);
    const Shape as = a.shape();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        if (na) {
            Tensor<T> ga(as);
            const T* g = gy->data();
            const T* pb = b.data();
            T* dst = ga.mutable_data();
            detail::for_each<T>(ga.numel(), [&](std::int64_t i) {
                dst[i] = g[i] * pb[detail::broadcast_index<T>(as, kind, i)];
            });
            t.accumulate(a.id(), as, ga.vec());
        }
        if (nb) {
            Tensor<T> prod(as);
            const T* g = gy->data();
            const T* pa = a.data();
            T* dst = prod.mutable_data();
            detail::for_each<T>(prod.numel(),
                                [&](std::int64_t i) { dst[i] = g[i] * pa[i]; });
            Tensor<T> gb = detail::reduce_to(prod, as, kind, b.shape());
            t.accumulate(b.id(), b.shape(), gb.vec());
        }
    }, a, b);
    return y;
}

// y = s * x for a plain scalar s.
template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T s) {
    Tensor<T> y(x.shape());
    const T* px = x.data();
    T* py = y.mutable_data();
    detail::for_each<T>(x.numel(), [&](std::int64_t i) { py[i] = s * px[i]; });
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(x.shape());
        const T* g = gy->data();
        T* dst = gx.mutable_data();
        detail::for_each<T>(gx.numel(),
                            [&](std::int64_t i) { dst[i] = s * g[i]; });
        t.accumulate(x.id(), x.shape(), gx.vec());
    }, x);
    return y;
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    const T* px = x.data();
    T* py = y.mutable_data();
    detail::for_each<T>(x.numel(),
                        [&](std::int64_t i) { py[i] = px[i] > T(0) ? px[i] : T(0); });
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(x.shape());
        const T* g = gy->data();
        const T* xv = x.data();
        T* dst = gx.mutable_data();
        detail::for_each<T>(gx.numel(), [&](std::int64_t i) {
            dst[i] = xv[i] > T(0) ? g[i] : T(0);
        });
        t.accumulate(x.id(), x.shape(), gx.vec());
    }, x);
    return y;
}

// Mean over the channel axis: (N,C,H,W) -> (N,1,H,W).
template <typename T>
Tensor<T> channel_mean(Tape<T>* tape, const Tensor<T>& x) {
    const Shape s = x.shape();
    DARK_CHECK(s.c >= 1, "channel_mean: no channels in " << s.str());
    Tensor<T> y(Shape{s.n, 1, s.h, s.w});
    const std::int64_t hw = s.h * s.w;
    const T inv = T(1) / static_cast<T>(s.c);
    parallel_for(s.n, 1, [&](std::int64_t a, std::int64_t b) {
        for (std::int64_t n = a; n < b; ++n) {
            T* dst = y.mutable_data() + n * hw;
            for (std::int64_t i = 0; i < hw; ++i) dst[i] = T(0);
            for (std::int64_t c = 0; c < s.c; ++c) {
                const T* src = x.data() + (n * s.c + c) * hw;
                for (std::int64_t i = 0; i < hw; ++i) dst[i] += src[i];
            }
            for (std::int64_t i = 0; i < hw; ++i) dst[i] *= inv;
        }
    });
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(s);
        const T* g = gy->data();
        T* dst = gx.mutable_data();
        detail::for_each<T>(s.numel(), [&](std::int64_t i) {
            const std::int64_t n = i / (s.c * hw);
            dst[i] = g[n * hw + i % hw] * inv;
        });
        t.accumulate(x.id(), s, gx.vec());
    }, x);
    return y;
}

template <typename T>
Tensor<T> concat_channels(Tape<T>* tape, const std::vector<Tensor<T>>& parts) {
    DARK_CHECK(!parts.empty(), "concat_channels: no operands");
    const Shape first = parts[0].shape();
    std::int64_t total_c = 0;
    for (const auto& p : parts) {
        const Shape s = p.shape();
        DARK_CHECK(s.n == first.n && s.h == first.h && s.w == first.w,
                   "concat_channels: incompatible shapes " << first.str()
                       << " and " << s.str());
        total_c += s.c;
    }
    Tensor<T> y(Shape{first.n, total_c, first.h, first.w});
    const std::int64_t hw = first.h * first.w;
    std::int64_t base_c = 0;
    for (const auto& p : parts) {
        const Shape s = p.shape();
        parallel_for(s.n * s.c, 1, [&](std::int64_t a, std::int64_t b) {
            for (std::int64_t pl = a; pl < b; ++pl) {
                const std::int64_t n = pl / s.c;
                const std::int64_t c = pl % s.c;
                std::copy_n(p.data() + pl * hw, hw,
                            y.mutable_data() +
                                ((n * total_c) + base_c + c) * hw);
            }
        });
        base_c += s.c;
    }
    if (!tape) return y;
    bool any = false;
    for (const auto& p : parts) any = any || tape->wants(p);
    if (!any) return y;
    const std::uint64_t yid = y.id();
    std::vector<Tensor<T>> held = parts;
    auto backward = [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        std::int64_t c0 = 0;
        for (const auto& p : held) {
            const Shape s = p.shape();
            Tensor<T> gp(s);
            for (std::int64_t n = 0; n < s.n; ++n)
                for (std::int64_t c = 0; c < s.c; ++c)
                    std::copy_n(gy->data() + ((n * total_c) + c0 + c) * hw, hw,
                                gp.mutable_data() + (n * s.c + c) * hw);
            t.accumulate(p.id(), s, gp.vec());
            c0 += s.c;
        }
    };
    for (const auto& p : parts)
        if (p.requires_grad()) tape->watch(p);
    tape->record(y, backward);
    return y;
}

template <typename T>
Tensor<T> slice_channels(Tape<T>* tape, const Tensor<T>& x, std::int64_t c0,
                         std::int64_t c1) {
    const Shape s = x.shape();
    DARK_CHECK(0 <= c0 && c0 < c1 && c1 <= s.c,
               "slice_channels: range [" << c0 << "," << c1
                                         << ") outside " << s.str());
    Tensor<T> y(Shape{s.n, c1 - c0, s.h, s.w});
    const std::int64_t hw = s.h * s.w;
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t c = c0; c < c1; ++c)
            std::copy_n(x.data() + (n * s.c + c) * hw, hw,
                        y.mutable_data() + (n * (c1 - c0) + c - c0) * hw);
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(s);
        for (std::int64_t n = 0; n < s.n; ++n)
            for (std::int64_t c = c0; c < c1; ++c)
                std::copy_n(gy->data() + (n * (c1 - c0) + c - c0) * hw, hw,
                            gx.mutable_data() + (n * s.c + c) * hw);
        t.accumulate(x.id(), s, gx.vec());
    }, x);
    return y;
}

template <typename T>
Tensor<T> reshape(Tape<T>* tape, const Tensor<T>& x, Shape shape) {
    Tensor<T> y = x.reshaped(shape);
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        t.accumulate(x.id(), x.shape(), gy->vec());
    }, x);
    return y;
}

// Mean over all elements -> scalar tensor.
template <typename T>
Tensor<T> reduce_mean(Tape<T>* tape, const Tensor<T>& x) {
    const std::int64_t n = x.numel();
    DARK_CHECK(n > 0, "reduce_mean: empty tensor");
    // Fixed-size chunk partials summed in order: reproducible at any thread
    // count.
    const std::int64_t grain = detail::kElemGrain;
    const std::int64_t chunks = (n + grain - 1) / grain;
    std::vector<double> part(chunks, 0.0);
    parallel_for(n, grain, [&](std::int64_t a, std::int64_t b) {
        double acc = 0.0;
        const T* p = x.data();
        for (std::int64_t i = a; i < b; ++i) acc += static_cast<double>(p[i]);
        part[a / grain] = acc;
    });
    double total = 0.0;
    for (double v : part) total += v;
    Tensor<T> y = Tensor<T>::scalar(static_cast<T>(total / n));
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const T g = t.find_grad(yid)->item() / static_cast<T>(n);
        Tensor<T> gx(x.shape(), g);
        t.accumulate(x.id(), x.shape(), gx.vec());
    }, x);
    return y;
}

// ---------------------------------------------------------------------------
// Softmax. `spatial` normalizes each (n,c) plane over all H*W positions;
// `channel` normalizes across C at each (n,h,w); `scale` is the channel axis
// of a stacked-stream tensor (scales packed into the channel slot) and shares
// its implementation.

enum class SoftmaxAxis { spatial, channel, scale };

template <typename T>
Tensor<T> softmax_axis(Tape<T>* tape, const Tensor<T>& x, SoftmaxAxis axis) {
    const Shape s = x.shape();
    const bool over_space = axis == SoftmaxAxis::spatial;
    const std::int64_t extent = over_space ? s.h * s.w : s.c;
    DARK_CHECK(extent >= 1, "softmax_axis: empty axis in " << s.str());

    Tensor<T> y(s);
    const std::int64_t hw = s.h * s.w;
    const std::int64_t rows = over_space ? s.n * s.c : s.n * hw;
    parallel_for(rows, 1, [&](std::int64_t a, std::int64_t b) {
        for (std::int64_t r = a; r < b; ++r) {
            // Row r walks the chosen axis; stride is 1 in space, hw across
            // channels.
            const std::int64_t base =
                over_space ? r * hw : (r / hw) * s.c * hw + r % hw;
            const std::int64_t stride = over_space ? 1 : hw;
            const T* px = x.data();
            T* py = y.mutable_data();
            T mx = px[base];
            for (std::int64_t i = 1; i < extent; ++i)
                mx = std::max(mx, px[base + i * stride]);
            double sum = 0.0;
            for (std::int64_t i = 0; i < extent; ++i) {
                const T e = std::exp(px[base + i * stride] - mx);
                py[base + i * stride] = e;
                sum += static_cast<double>(e);
            }
            const T inv = static_cast<T>(1.0 / sum);
            for (std::int64_t i = 0; i < extent; ++i)
                py[base + i * stride] *= inv;
        }
    });
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(s);
        parallel_for(rows, 1, [&](std::int64_t a, std::int64_t b) {
            for (std::int64_t r = a; r < b; ++r) {
                const std::int64_t base =
                    over_space ? r * hw : (r / hw) * s.c * hw + r % hw;
                const std::int64_t stride = over_space ? 1 : hw;
                const T* g = gy->data();
                const T* py = y.data();
                double dot = 0.0;
                for (std::int64_t i = 0; i < extent; ++i)
                    dot += static_cast<double>(g[base + i * stride]) *
                           static_cast<double>(py[base + i * stride]);
                T* dst = gx.mutable_data();
                for (std::int64_t i = 0; i < extent; ++i) {
                    const std::int64_t k = base + i * stride;
                    dst[k] = py[k] * (g[k] - static_cast<T>(dot));
                }
            }
        });
        t.accumulate(x.id(), s, gx.vec());
    }, x);
    return y;
}

// (N,C,H,W) -> (N,C,1,1) spatial mean.
template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x) {
    const Shape s = x.shape();
    DARK_CHECK(s.h >= 1 && s.w >= 1,
               "global_avg_pool: empty spatial extent in " << s.str());
    Tensor<T> y(Shape{s.n, s.c, 1, 1});
    const std::int64_t hw = s.h * s.w;
    parallel_for(s.n * s.c, 1, [&](std::int64_t a, std::int64_t b) {
        for (std::int64_t p = a; p < b; ++p) {
            const T* src = x.data() + p * hw;
            double acc = 0.0;
            for (std::int64_t i = 0; i < hw; ++i)
                acc += static_cast<double>(src[i]);
            y.mutable_data()[p] = static_cast<T>(acc / hw);
        }
    });
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(s);
        const T* g = gy->data();
        T* dst = gx.mutable_data();
        const T inv = T(1) / static_cast<T>(hw);
        detail::for_each<T>(s.numel(),
                            [&](std::int64_t i) { dst[i] = g[i / hw] * inv; });
        t.accumulate(x.id(), s, gx.vec());
    }, x);
    return y;
}

// ---------------------------------------------------------------------------
// Bilinear resampling with half-pixel centers. The interpolation is written
// as v0 + f*(v1 - v0) so constant inputs reproduce exactly at any scale.

namespace detail {
struct LerpCoord {
    std::int64_t lo = 0, hi = 0;
    double f = 0.0;
};

inline LerpCoord lerp_coord(std::int64_t dst, std::int64_t dst_extent,
                            std::int64_t src_extent) {
    LerpCoord c;
    const double pos = (static_cast<double>(dst) + 0.5) *
                           (static_cast<double>(src_extent) / dst_extent) -
                       0.5;
    const double fl = std::floor(pos);
    c.f = pos - fl;
    c.lo = static_cast<std::int64_t>(fl);
    c.hi = c.lo + 1;
    if (c.lo < 0) { c.lo = 0; c.hi = 0; c.f = 0.0; }
    if (c.hi >= src_extent) { c.hi = src_extent - 1; c.lo = c.hi; c.f = 0.0; }
    return c;
}
} // namespace detail

template <typename T>
Tensor<T> resample_bilinear(Tape<T>* tape, const Tensor<T>& x,
                            std::int64_t target_h, std::int64_t target_w) {
    const Shape s = x.shape();
    DARK_CHECK(target_h >= 1 && target_w >= 1,
               "resample_bilinear: target " << target_h << "x" << target_w
                                            << " must be at least 1x1");
    DARK_CHECK(s.h >= 1 && s.w >= 1,
               "resample_bilinear: empty input " << s.str());
    Tensor<T> y(Shape{s.n, s.c, target_h, target_w});

    std::vector<detail::LerpCoord> ys(target_h), xs(target_w);
    for (std::int64_t i = 0; i < target_h; ++i)
        ys[i] = detail::lerp_coord(i, target_h, s.h);
    for (std::int64_t j = 0; j < target_w; ++j)
        xs[j] = detail::lerp_coord(j, target_w, s.w);

    const std::int64_t planes = s.n * s.c;
    parallel_for(planes, 1, [&](std::int64_t a, std::int64_t b) {
        for (std::int64_t p = a; p < b; ++p) {
            const T* src = x.data() + p * s.h * s.w;
            T* dst = y.mutable_data() + p * target_h * target_w;
            for (std::int64_t i = 0; i < target_h; ++i) {
                const auto& cy = ys[i];
                const T* r0 = src + cy.lo * s.w;
                const T* r1 = src + cy.hi * s.w;
                for (std::int64_t j = 0; j < target_w; ++j) {
                    const auto& cx = xs[j];
                    const T t0 = r0[cx.lo] +
                                 static_cast<T>(cx.f) * (r0[cx.hi] - r0[cx.lo]);
                    const T t1 = r1[cx.lo] +
                                 static_cast<T>(cx.f) * (r1[cx.hi] - r1[cx.lo]);
                    dst[i * target_w + j] =
                        t0 + static_cast<T>(cy.f) * (t1 - t0);
                }
            }
        }
    });
    if (!tape || !tape->wants(x)) return y;
    const std::uint64_t yid = y.id();
    tape->record(y, [=](Tape<T>& t) {
        const Tensor<T>* gy = t.find_grad(yid);
        Tensor<T> gx(s);
        parallel_for(planes, 1, [&](std::int64_t a, std::int64_t b) {
            for (std::int64_t p = a; p < b; ++p) {
                const T* g = gy->data() + p * target_h * target_w;
                T* dst = gx.mutable_data() + p * s.h * s.w;
                for (std::int64_t i = 0; i < target_h; ++i) {
                    const auto& cy = ys[i];
                    for (std::int64_t j = 0; j < target_w; ++j) {
                        const auto& cx = xs[j];
                        const T gv = g[i * target_w + j];
                        const T fy = static_cast<T>(cy.f);
                        const T fx = static_cast<T>(cx.f);
                        dst[cy.lo * s.w + cx.lo] += (1 - fy) * (1 - fx) * gv;
                        dst[cy.lo * s.w + cx.hi] += (1 - fy) * fx * gv;
                        dst[cy.hi * s.w + cx.lo] += fy * (1 - fx) * gv;
                        dst[cy.hi * s.w + cx.hi] += fy * fx * gv;
                    }
                }
            }
        });
        t.accumulate(x.id(), s, gx.vec());
    }, x);
    return y;
}

// Inference-only range clamp; not recorded on the tape.
template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    const T* px = x.data();
    T* py = y.mutable_data();
    detail::for_each<T>(x.numel(), [&](std::int64_t i) {
        py[i] = std::min(T(1), std::max(T(0), px[i]));
    });
    return y;
}

} // namespace dark
