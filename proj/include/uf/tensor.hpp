#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "uf/errors.hpp"

namespace uf {

// Dense rank-4 extents in N,C,H,W order. All extents are >= 1.
struct Shape {
    int64_t n = 1;
    int64_t c = 1;
    int64_t h = 1;
    int64_t w = 1;

    int64_t numel() const { return n * c * h * w; }
    int64_t plane() const { return h * w; }
    bool operator==(const Shape&) const = default;

    std::string str() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
};

template <typename T>
struct TensorStorage {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until first touched
    bool requires_grad = false;
};

// Shared handle to a rank-4 buffer. Copies alias the same storage, which is
// what lets tape nodes and the parameter registry refer to live data.
template <typename T>
class Tensor {
public:
    Tensor() : s_(std::make_shared<TensorStorage<T>>()) { s_->value.assign(1, T(0)); }

    explicit Tensor(Shape shape, bool requires_grad = false)
        : s_(std::make_shared<TensorStorage<T>>()) {
        if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1)
            throw ShapeError("tensor extents must be >= 1, got " + shape.str());
        s_->shape = shape;
        s_->value.assign(static_cast<size_t>(shape.numel()), T(0));
        s_->requires_grad = requires_grad;
    }

    static Tensor scalar(T v) {
        Tensor t{Shape{1, 1, 1, 1}};
        t.data()[0] = v;
        return t;
    }

    static Tensor full(Shape shape, T v) {
        Tensor t{shape};
        std::fill(t.values().begin(), t.values().end(), v);
        return t;
    }

    // Handle semantics: accessors are shallow-const (they never reseat the
    // handle; the storage they expose is shared and mutable).
    const Shape& shape() const { return s_->shape; }
    int64_t numel() const { return s_->shape.numel(); }

    T* data() const { return s_->value.data(); }
    std::vector<T>& values() const { return s_->value; }

    T& at(int64_t n, int64_t c, int64_t h, int64_t w) const {
        const Shape& s = s_->shape;
        return s_->value[static_cast<size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
    }

    T item() const {
        if (numel() != 1) throw ShapeError("item() requires a scalar tensor, got " + shape().str());
        return s_->value[0];
    }

    bool requires_grad() const { return s_->requires_grad; }
    void set_requires_grad(bool rg) const { s_->requires_grad = rg; }

    bool grad_allocated() const { return !s_->grad.empty(); }

    // Zero-initialized on first access; gradients accumulate into it.
    std::vector<T>& grad() const {
        if (s_->grad.empty()) s_->grad.assign(static_cast<size_t>(numel()), T(0));
        return s_->grad;
    }
    T* grad_data() const { return grad().data(); }

    void zero_grad() const {
        if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
    }

    std::shared_ptr<TensorStorage<T>> storage() const { return s_; }
    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

private:
    std::shared_ptr<TensorStorage<T>> s_;
};

// Reverse-mode tape. Operations append themselves in execution order, so the
// record is topologically sorted by construction; backward() walks it once in
// reverse. Buffers owned solely by the tape are released as soon as the walk
// has consumed them, which caps peak memory during training.
template <typename T>
class Tape {
public:
    void record(const Tensor<T>& out, std::function<void()> bwd) {
        nodes_.push_back(Node{out.storage(), std::move(bwd)});
    }

    size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    void backward(Tensor<T>& loss) {
        if (consumed_) throw StateError("backward already ran on this tape; call reset() first");
        if (loss.numel() != 1)
            throw ShapeError("backward requires a scalar loss, got " + loss.shape().str());
        consumed_ = true;
        loss.grad()[0] = T(1);
        for (size_t i = nodes_.size(); i-- > 0;) {
            Node& nd = nodes_[i];
            nd.bwd();
            nd.bwd = nullptr;  // drop captured handles
            nd.out->grad.clear();
            nd.out->grad.shrink_to_fit();
            // Sole owner means no caller kept a handle; the value cannot be
            // read again (all potential readers ran earlier in the walk).
            if (nd.out.use_count() == 1) {
                nd.out->value.clear();
                nd.out->value.shrink_to_fit();
            }
        }
    }

    void reset() {
        nodes_.clear();
        consumed_ = false;
    }

private:
    struct Node {
        std::shared_ptr<TensorStorage<T>> out;
        std::function<void()> bwd;
    };
    std::vector<Node> nodes_;
    bool consumed_ = false;
};

// Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
template <typename T>
void backward(Tensor<T> loss, Tape<T>& tape) {
    tape.backward(loss);
}

}  // namespace uf
