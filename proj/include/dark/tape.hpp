// Copyright (c) 2026 dark-engine contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dark/tensor.hpp"

namespace dark {

// Define-by-run record of differentiable operations. A fresh tape is built
// for every training step; it must not be shared across steps or threads.
//
// Each record owns a closure that, given the gradient of its output, adds the
// gradients of its inputs. Records are appended in execution order, so one
// reverse sweep visits every record exactly once and sees operand gradients
// fully accumulated before their producers run.
template <typename T>
class Tape {
public:
    // Marks a leaf tensor (typically a parameter) as participating in the
    // graph even before any op consumes it.
    void watch(const Tensor<T>& t) { known_.insert(t.id()); }

    bool attached(const Tensor<T>& t) const {
        return known_.count(t.id()) > 0;
    }

    // An op should record iff some input is attached or asks for gradients.
    bool wants(const Tensor<T>& t) const {
        return t.requires_grad() || attached(t);
    }

    // Registers the output of an op together with its backward closure.
    // Inputs that require gradients are adopted as leaves on first sight.
    template <typename... Inputs>
    void record(const Tensor<T>& out, std::function<void(Tape&)> backward,
                const Inputs&... inputs) {
        (adopt(inputs), ...);
        known_.insert(out.id());
        records_.push_back(Record{out.id(), std::move(backward)});
    }

    // Adds `delta` into the gradient buffer of tensor id `id`.
    void accumulate(std::uint64_t id, const Shape& shape,
                    const std::vector<T>& delta) {
        auto it = grads_.find(id);
        if (it == grads_.end()) {
            grads_.emplace(id, Tensor<T>(shape, delta));
            return;
        }
        DARK_CHECK(it->second.shape() == shape,
                   "tape: conflicting gradient shapes "
                       << it->second.shape().str() << " vs " << shape.str());
        T* dst = it->second.mutable_data();
        const std::int64_t n = shape.numel();
        for (std::int64_t i = 0; i < n; ++i) dst[i] += delta[i];
    }

    // Gradient of the recorded output with tensor id `id`, or nullptr if no
    // path from the loss reached it.
    const Tensor<T>* find_grad(std::uint64_t id) const {
        auto it = grads_.find(id);
        return it == grads_.end() ? nullptr : &it->second;
    }

    // Reverse sweep from a scalar loss. Gradients of every reached tensor
    // (leaves included) are available through grad() afterwards.
    void backward(const Tensor<T>& loss) {
        DARK_CHECK(loss.numel() == 1,
                   "backward: loss must be scalar, got " << loss.shape().str());
        DARK_CHECK(attached(loss),
                   "backward: loss is detached from this tape");
        grads_.clear();
        grads_.emplace(loss.id(), Tensor<T>::scalar(T(1)));
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            if (grads_.count(it->out_id) == 0) continue; // no path from loss
            it->backward(*this);
        }
    }

    // Gradient for `t` after backward(); zeros when the loss does not depend
    // on it.
    Tensor<T> grad(const Tensor<T>& t) const {
        if (const Tensor<T>* g = find_grad(t.id())) return *g;
        return Tensor<T>::zeros(t.shape());
    }

    std::size_t size() const { return records_.size(); }

private:
    struct Record {
        std::uint64_t out_id;
        std::function<void(Tape&)> backward;
    };

    void adopt(const Tensor<T>& t) {
        if (t.requires_grad()) known_.insert(t.id());
    }

    std::vector<Record> records_;
    std::unordered_set<std::uint64_t> known_;
    std::unordered_map<std::uint64_t, Tensor<T>> grads_;
};

} // namespace dark
