// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dark/common.hpp"

namespace dark {

// Extents in (batch, channel, height, width) order; data is row-major NCHW.
struct Shape {
    std::int64_t n = 0;
    std::int64_t c = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;

    std::int64_t numel() const { return n * c * h * w; }

    bool operator==(const Shape& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const {
        std::ostringstream os;
        os << "(" << n << "," << c << "," << h << "," << w << ")";
        return os.str();
    }
};

namespace detail {
inline std::uint64_t next_tensor_id() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1);
}
} // namespace detail

// Dense rank-4 tensor. Copies share the underlying buffer (and identity);
// buffers are treated as immutable while a forward/backward pass is running.
// The optimizer rewrites parameter buffers in place between steps.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0))
        : shape_(shape),
          data_(std::make_shared<std::vector<T>>(check_numel(shape), fill)),
          id_(detail::next_tensor_id()) {}

    Tensor(Shape shape, std::vector<T> values)
        : shape_(shape),
          data_(std::make_shared<std::vector<T>>(std::move(values))),
          id_(detail::next_tensor_id()) {
        DARK_CHECK(static_cast<std::int64_t>(data_->size()) == shape_.numel(),
                   "Tensor: data length " << data_->size()
                                          << " does not match shape "
                                          << shape_.str());
    }

    static Tensor zeros(Shape shape) { return Tensor(shape, T(0)); }
    static Tensor full(Shape shape, T value) { return Tensor(shape, value); }
    static Tensor scalar(T value) { return Tensor(Shape{1, 1, 1, 1}, value); }

    // Same buffer, new extents; element order is preserved.
    Tensor reshaped(Shape shape) const {
        DARK_CHECK(shape.numel() == shape_.numel(),
                   "reshape: element count mismatch, " << shape_.str() << " -> "
                                                       << shape.str());
        Tensor out;
        out.shape_ = shape;
        out.data_ = data_;
        out.id_ = detail::next_tensor_id();
        out.requires_grad_ = requires_grad_;
        return out;
    }

    const Shape& shape() const { return shape_; }
    std::int64_t numel() const { return shape_.numel(); }
    bool defined() const { return static_cast<bool>(data_); }

    const T* data() const { return data_->data(); }
    T* mutable_data() { return data_->data(); }
    const std::vector<T>& vec() const { return *data_; }

    T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return (*data_)[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
        return (*data_)[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    T item() const {
        DARK_CHECK(numel() == 1, "item: tensor " << shape_.str()
                                                 << " is not a scalar");
        return (*data_)[0];
    }

    bool requires_grad() const { return requires_grad_; }
    Tensor& set_requires_grad(bool v) {
        requires_grad_ = v;
        return *this;
    }

    // Identity used by the tape; shared between copies, fresh after reshape.
    std::uint64_t id() const { return id_; }

    bool all_finite() const {
        for (const T& v : *data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

private:
    static std::int64_t check_numel(const Shape& s) {
        DARK_CHECK(s.n >= 0 && s.c >= 0 && s.h >= 0 && s.w >= 0,
                   "Tensor: negative extent in shape " << s.str());
        return s.numel();
    }

    Shape shape_{};
    std::shared_ptr<std::vector<T>> data_;
    bool requires_grad_ = false;
    std::uint64_t id_ = 0;
};

} // namespace dark
