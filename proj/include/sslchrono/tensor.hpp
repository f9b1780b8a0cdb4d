#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sslchrono/errors.hpp"
#include "sslchrono/rng.hpp"

// Reverse-mode autodiff on dense row-major tensors. Float storage is the
// training precision; the same templates instantiate at double so tests can
// replay a recorded graph in 64-bit.

namespace sslchrono {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

enum class Mode { kTrain, kEval };

template <typename T>
struct TensorStorage {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until a gradient is accumulated
    bool requires_grad = false;
};

// Lightweight handle; copies share the underlying buffer.
template <typename T>
class TensorT {
public:
    TensorT() : st_(std::make_shared<TensorStorage<T>>()) {}

    static TensorT zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), T(0), requires_grad);
    }

    static TensorT filled(Shape shape, T fill, bool requires_grad = false) {
        TensorT t;
        validate_shape(shape);
        t.st_->value.assign(static_cast<size_t>(shape_numel(shape)), fill);
        t.st_->shape = std::move(shape);
        t.st_->requires_grad = requires_grad;
        return t;
    }

    static TensorT from(Shape shape, std::vector<T> data, bool requires_grad = false) {
        validate_shape(shape);
        if (shape_numel(shape) != static_cast<int64_t>(data.size()))
            shape_error("tensor data length " + std::to_string(data.size()) +
                        " does not match shape " + shape_str(shape));
        TensorT t;
        t.st_->shape = std::move(shape);
        t.st_->value = std::move(data);
        t.st_->requires_grad = requires_grad;
        return t;
    }

    static TensorT scalar(T v) { return from({}, {v}); }

    const Shape& shape() const { return st_->shape; }
    int64_t rank() const { return static_cast<int64_t>(st_->shape.size()); }
    int64_t dim(int i) const { return st_->shape[static_cast<size_t>(i)]; }
    int64_t size() const { return static_cast<int64_t>(st_->value.size()); }

    std::span<T> data() { return st_->value; }
    std::span<const T> data() const { return st_->value; }

    T& at(int64_t i) { return st_->value[static_cast<size_t>(i)]; }
    T at(int64_t i) const { return st_->value[static_cast<size_t>(i)]; }
    T& at(int64_t i, int64_t j) { return st_->value[static_cast<size_t>(i * dim(1) + j)]; }
    T at(int64_t i, int64_t j) const { return st_->value[static_cast<size_t>(i * dim(1) + j)]; }

    T item() const {
        if (size() != 1) value_error("item() requires a single-element tensor, got " + shape_str(shape()));
        return st_->value[0];
    }

    bool requires_grad() const { return st_->requires_grad; }
    void set_requires_grad(bool rg) { st_->requires_grad = rg; }

    bool has_grad() const { return !st_->grad.empty(); }
    std::span<const T> grad() const { return st_->grad; }
    std::span<T> grad_mut() { return st_->grad; }

    void zero_grad() { st_->grad.clear(); }

    void accumulate_grad(std::span<const T> g) {
        if (static_cast<int64_t>(g.size()) != size())
            shape_error("gradient length mismatch for tensor " + shape_str(shape()));
        if (st_->grad.empty()) st_->grad.assign(st_->value.size(), T(0));
        T* dst = st_->grad.data();
        for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    }

    // Deep copy of values; gradients are not copied.
    TensorT clone() const {
        TensorT t;
        t.st_->shape = st_->shape;
        t.st_->value = st_->value;
        t.st_->requires_grad = st_->requires_grad;
        return t;
    }

    bool same_storage(const TensorT& other) const { return st_.get() == other.st_.get(); }
    const void* storage_id() const { return st_.get(); }

private:
    static void validate_shape(const Shape& shape) {
        for (int64_t d : shape)
            if (d <= 0) shape_error("dimension sizes must be positive, got " + shape_str(shape));
    }

    std::shared_ptr<TensorStorage<T>> st_;
};

using Tensor = TensorT<float>;

// Records backward rules in execution order; reverse iteration yields a valid
// topological order. One backward pass per recording.
template <typename T>
class TapeT {
public:
    bool recording() const { return recording_; }
    void set_recording(bool on) { recording_ = on; }

    void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

    size_t node_count() const { return nodes_.size(); }

    void backward(const TensorT<T>& loss) {
        if (loss.size() != 1)
            value_error("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
        if (consumed_)
            state_error("tape already consumed by a previous backward pass; record a new forward first");
        consumed_ = true;
        TensorT<T> root = loss;
        std::vector<T> one(1, T(1));
        root.accumulate_grad(one);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
        nodes_.clear();
    }

private:
    std::vector<std::function<void()>> nodes_;
    bool recording_ = true;
    bool consumed_ = false;
};

using Tape = TapeT<float>;

namespace detail {

template <typename T>
void check_finite(const TensorT<T>& t, const char* op) {
    for (T v : t.data())
        if (!std::isfinite(static_cast<double>(v)))
            numeric_error(std::string(op) + " produced a non-finite value");
}

template <typename T>
bool want_node(const TapeT<T>& tape, bool any_input_requires_grad) {
    return tape.recording() && any_input_requires_grad;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> add(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape() != b.shape())
        shape_error("add: shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = TensorT<T>::zeros(a.shape());
    auto av = a.data(), bv = b.data();
    auto ov = out.data();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    detail::check_finite(out, "add");
    if (detail::want_node(tape, a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([a = a, b = b, out = out]() mutable {
            if (!out.has_grad()) return;
            if (a.requires_grad()) a.accumulate_grad(out.grad());
            if (b.requires_grad()) b.accumulate_grad(out.grad());
        });
    }
    return out;
}

template <typename T>
TensorT<T> mul(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape() != b.shape())
        shape_error("mul: shapes differ " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto out = TensorT<T>::zeros(a.shape());
    auto av = a.data(), bv = b.data();
    auto ov = out.data();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    detail::check_finite(out, "mul");
    if (detail::want_node(tape, a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([a = a, b = b, out = out]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            if (a.requires_grad()) {
                std::vector<T> g(go.size());
                auto bv2 = b.data();
                for (size_t i = 0; i < g.size(); ++i) g[i] = go[i] * bv2[i];
                a.accumulate_grad(g);
            }
            if (b.requires_grad()) {
                std::vector<T> g(go.size());
                auto av2 = a.data();
                for (size_t i = 0; i < g.size(); ++i) g[i] = go[i] * av2[i];
                b.accumulate_grad(g);
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> scale(TapeT<T>& tape, const TensorT<T>& a, T factor) {
    auto out = TensorT<T>::zeros(a.shape());
    auto av = a.data();
    auto ov = out.data();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * factor;
    detail::check_finite(out, "scale");
    if (detail::want_node(tape, a.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([a = a, out = out, factor]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            std::vector<T> g(go.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = go[i] * factor;
            a.accumulate_grad(g);
        });
    }
    return out;
}

template <typename T>
TensorT<T> relu(TapeT<T>& tape, const TensorT<T>& x) {
    auto out = TensorT<T>::zeros(x.shape());
    auto xv = x.data();
    auto ov = out.data();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] = xv[i] > T(0) ? xv[i] : T(0);
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            auto xv2 = x.data();
            std::vector<T> g(go.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = xv2[i] > T(0) ? go[i] : T(0);
            x.accumulate_grad(g);
        });
    }
    return out;
}

// Inverted dropout: train mode zeroes with probability p and scales survivors
// by 1/(1-p); eval mode is the identity. The mask is drawn once and reused in
// backward.
template <typename T>
TensorT<T> dropout(TapeT<T>& tape, const TensorT<T>& x, double p, Mode mode, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        value_error("dropout probability must lie in [0, 1), got " + std::to_string(p));
    if (mode == Mode::kEval || p == 0.0) return x;
    auto out = TensorT<T>::zeros(x.shape());
    auto keep = std::make_shared<std::vector<uint8_t>>(x.data().size());
    const T inv_keep = T(1.0 / (1.0 - p));
    auto xv = x.data();
    auto ov = out.data();
    for (size_t i = 0; i < ov.size(); ++i) {
        bool k = rng.uniform() >= p;
        (*keep)[i] = k;
        ov[i] = k ? xv[i] * inv_keep : T(0);
    }
    detail::check_finite(out, "dropout");
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out, keep, inv_keep]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            std::vector<T> g(go.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = (*keep)[i] ? go[i] * inv_keep : T(0);
            x.accumulate_grad(g);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// matrix ops
// ---------------------------------------------------------------------------

namespace detail {

// C(m x n) += or = A(m x k) * B(k x n); ikj order so the inner loop is
// contiguous and vectorizable.
template <typename T>
void matmul_raw(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n, bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, T(0));
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const T aip = arow[p];
            const T* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

// C(m x n) += A(m x k) * B(n x k)^T
template <typename T>
void matmul_bt_raw(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T acc = T(0);
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C(k x n) += A(m x k)^T * B(m x n)
template <typename T>
void matmul_at_raw(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t p = 0; p < m; ++p) {
        const T* arow = a + p * k;
        const T* brow = b + p * n;
        for (int64_t i = 0; i < k; ++i) {
            const T aip = arow[i];
            T* crow = c + i * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

}  // namespace detail

template <typename T>
TensorT<T> matmul(TapeT<T>& tape, const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        shape_error("matmul requires rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                    shape_str(b.shape()));
    if (a.dim(1) != b.dim(0))
        shape_error("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                    shape_str(b.shape()));
    const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto out = TensorT<T>::zeros({m, n});
    detail::matmul_raw(a.data().data(), b.data().data(), out.data().data(), m, k, n, false);
    detail::check_finite(out, "matmul");
    if (detail::want_node(tape, a.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([a = a, b = b, out = out, m, k, n]() mutable {
            if (!out.has_grad()) return;
            const T* go = out.grad().data();
            if (a.requires_grad()) {
                std::vector<T> ga(static_cast<size_t>(m * k), T(0));
                detail::matmul_bt_raw(go, b.data().data(), ga.data(), m, n, k);
                a.accumulate_grad(ga);
            }
            if (b.requires_grad()) {
                std::vector<T> gb(static_cast<size_t>(k * n), T(0));
                detail::matmul_at_raw(a.data().data(), go, gb.data(), m, k, n);
                b.accumulate_grad(gb);
            }
        });
    }
    return out;
}

template <typename T>
TensorT<T> transpose(TapeT<T>& tape, const TensorT<T>& x) {
    if (x.rank() != 2) shape_error("transpose requires a rank-2 tensor, got " + shape_str(x.shape()));
    const int64_t m = x.dim(0), n = x.dim(1);
    auto out = TensorT<T>::zeros({n, m});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.at(j, i) = x.at(i, j);
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out, m, n]() mutable {
            if (!out.has_grad()) return;
            std::vector<T> g(static_cast<size_t>(m * n));
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j)
                    g[static_cast<size_t>(i * n + j)] = out.grad()[static_cast<size_t>(j * m + i)];
            x.accumulate_grad(g);
        });
    }
    return out;
}

// out[i, j] = x[i, j] + bias[j]
template <typename T>
TensorT<T> add_row_bias(TapeT<T>& tape, const TensorT<T>& x, const TensorT<T>& bias) {
    if (x.rank() != 2 || bias.rank() != 1 || bias.dim(0) != x.dim(1))
        shape_error("add_row_bias: incompatible shapes " + shape_str(x.shape()) + " and " +
                    shape_str(bias.shape()));
    const int64_t m = x.dim(0), n = x.dim(1);
    auto out = TensorT<T>::zeros({m, n});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) + bias.at(j);
    detail::check_finite(out, "add_row_bias");
    if (detail::want_node(tape, x.requires_grad() || bias.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, bias = bias, out = out, m, n]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            if (x.requires_grad()) x.accumulate_grad(go);
            if (bias.requires_grad()) {
                std::vector<T> gb(static_cast<size_t>(n), T(0));
                for (int64_t i = 0; i < m; ++i)
                    for (int64_t j = 0; j < n; ++j)
                        gb[static_cast<size_t>(j)] += go[static_cast<size_t>(i * n + j)];
                bias.accumulate_grad(gb);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// reductions and reshaping
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> sum(TapeT<T>& tape, const TensorT<T>& x) {
    T acc = T(0);
    for (T v : x.data()) acc += v;
    auto out = TensorT<T>::scalar(acc);
    detail::check_finite(out, "sum");
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out]() mutable {
            if (!out.has_grad()) return;
            std::vector<T> g(static_cast<size_t>(x.size()), out.grad()[0]);
            x.accumulate_grad(g);
        });
    }
    return out;
}

// Extracts row i of a matrix as a 1 x n tensor.
template <typename T>
TensorT<T> row(TapeT<T>& tape, const TensorT<T>& x, int64_t i) {
    if (x.rank() != 2) shape_error("row requires a rank-2 tensor, got " + shape_str(x.shape()));
    if (i < 0 || i >= x.dim(0)) value_error("row index out of range");
    const int64_t n = x.dim(1);
    auto out = TensorT<T>::zeros({1, n});
    for (int64_t j = 0; j < n; ++j) out.at(0, j) = x.at(i, j);
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out, i, n]() mutable {
            if (!out.has_grad()) return;
            std::vector<T> g(static_cast<size_t>(x.size()), T(0));
            for (int64_t j = 0; j < n; ++j)
                g[static_cast<size_t>(i * n + j)] = out.grad()[static_cast<size_t>(j)];
            x.accumulate_grad(g);
        });
    }
    return out;
}

template <typename T>
TensorT<T> slice_cols(TapeT<T>& tape, const TensorT<T>& x, int64_t start, int64_t width) {
    if (x.rank() != 2) shape_error("slice_cols requires a rank-2 tensor");
    if (start < 0 || width <= 0 || start + width > x.dim(1)) value_error("slice_cols out of range");
    const int64_t m = x.dim(0), n = x.dim(1);
    auto out = TensorT<T>::zeros({m, width});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < width; ++j) out.at(i, j) = x.at(i, start + j);
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out, start, width, m, n]() mutable {
            if (!out.has_grad()) return;
            std::vector<T> g(static_cast<size_t>(x.size()), T(0));
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < width; ++j)
                    g[static_cast<size_t>(i * n + start + j)] =
                        out.grad()[static_cast<size_t>(i * width + j)];
            x.accumulate_grad(g);
        });
    }
    return out;
}

template <typename T>
TensorT<T> concat_cols(TapeT<T>& tape, const std::vector<TensorT<T>>& parts) {
    if (parts.empty()) value_error("concat_cols requires at least one input");
    const int64_t m = parts[0].dim(0);
    int64_t total = 0;
    bool any_grad = false;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.dim(0) != m) shape_error("concat_cols: row counts differ");
        total += p.dim(1);
        any_grad = any_grad || p.requires_grad();
    }
    auto out = TensorT<T>::zeros({m, total});
    int64_t off = 0;
    for (const auto& p : parts) {
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < p.dim(1); ++j) out.at(i, off + j) = p.at(i, j);
        off += p.dim(1);
    }
    if (detail::want_node(tape, any_grad)) {
        out.set_requires_grad(true);
        tape.record([parts = parts, out = out, m, total]() mutable {
            if (!out.has_grad()) return;
            int64_t off2 = 0;
            for (auto& p : parts) {
                const int64_t w = p.dim(1);
                if (p.requires_grad()) {
                    std::vector<T> g(static_cast<size_t>(m * w));
                    for (int64_t i = 0; i < m; ++i)
                        for (int64_t j = 0; j < w; ++j)
                            g[static_cast<size_t>(i * w + j)] =
                                out.grad()[static_cast<size_t>(i * total + off2 + j)];
                    p.accumulate_grad(g);
                }
                off2 += w;
            }
        });
    }
    return out;
}

// Stacks 1 x n rows into a B x n matrix.
template <typename T>
TensorT<T> stack_rows(TapeT<T>& tape, const std::vector<TensorT<T>>& rows) {
    if (rows.empty()) value_error("stack_rows requires at least one input");
    const int64_t n = rows[0].size();
    bool any_grad = false;
    for (const auto& r : rows) {
        if (r.size() != n) shape_error("stack_rows: row lengths differ");
        any_grad = any_grad || r.requires_grad();
    }
    const int64_t b = static_cast<int64_t>(rows.size());
    auto out = TensorT<T>::zeros({b, n});
    for (int64_t i = 0; i < b; ++i)
        for (int64_t j = 0; j < n; ++j) out.at(i, j) = rows[static_cast<size_t>(i)].at(j);
    if (detail::want_node(tape, any_grad)) {
        out.set_requires_grad(true);
        tape.record([rows = rows, out = out, n]() mutable {
            if (!out.has_grad()) return;
            for (size_t i = 0; i < rows.size(); ++i) {
                if (!rows[i].requires_grad()) continue;
                std::vector<T> g(static_cast<size_t>(n));
                for (int64_t j = 0; j < n; ++j)
                    g[static_cast<size_t>(j)] = out.grad()[i * static_cast<size_t>(n) + static_cast<size_t>(j)];
                rows[i].accumulate_grad(g);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// normalization and attention support
// ---------------------------------------------------------------------------

namespace detail {

struct AxisIter {
    int64_t lines;   // number of independent slices
    int64_t length;  // elements per slice
    int64_t stride;  // distance between consecutive slice elements
    int64_t inner;   // elements in one inner block

    static AxisIter make(const Shape& shape, int axis) {
        AxisIter it;
        it.length = shape[static_cast<size_t>(axis)];
        int64_t inner = 1;
        for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
        it.stride = inner;
        it.inner = inner;
        it.lines = shape_numel(shape) / it.length;
        return it;
    }

    int64_t offset(int64_t line) const {
        const int64_t outer = line / inner;
        const int64_t in = line % inner;
        return outer * length * inner + in;
    }
};

}  // namespace detail

// Numerically stable softmax along the given axis (negative axes count from
// the end). Each slice along the axis sums to 1.
template <typename T>
TensorT<T> softmax(TapeT<T>& tape, const TensorT<T>& x, int axis = -1) {
    const int r = static_cast<int>(x.rank());
    if (r == 0) value_error("softmax requires a tensor of rank >= 1");
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        value_error("softmax axis " + std::to_string(axis) + " invalid for shape " + shape_str(x.shape()));

    auto it = detail::AxisIter::make(x.shape(), axis);
    auto out = TensorT<T>::zeros(x.shape());
    auto xv = x.data();
    auto ov = out.data();
    for (int64_t line = 0; line < it.lines; ++line) {
        const int64_t base = it.offset(line);
        T mx = xv[static_cast<size_t>(base)];
        for (int64_t j = 1; j < it.length; ++j)
            mx = std::max(mx, xv[static_cast<size_t>(base + j * it.stride)]);
        T denom = T(0);
        for (int64_t j = 0; j < it.length; ++j) {
            T e = std::exp(xv[static_cast<size_t>(base + j * it.stride)] - mx);
            ov[static_cast<size_t>(base + j * it.stride)] = e;
            denom += e;
        }
        const T inv = T(1) / denom;
        for (int64_t j = 0; j < it.length; ++j) ov[static_cast<size_t>(base + j * it.stride)] *= inv;
    }
    detail::check_finite(out, "softmax");
    if (detail::want_node(tape, x.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, out = out, it]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            auto sv = out.data();
            std::vector<T> g(go.size());
            for (int64_t line = 0; line < it.lines; ++line) {
                const int64_t base = it.offset(line);
                T dot = T(0);
                for (int64_t j = 0; j < it.length; ++j) {
                    const size_t idx = static_cast<size_t>(base + j * it.stride);
                    dot += go[idx] * sv[idx];
                }
                for (int64_t j = 0; j < it.length; ++j) {
                    const size_t idx = static_cast<size_t>(base + j * it.stride);
                    g[idx] = sv[idx] * (go[idx] - dot);
                }
            }
            x.accumulate_grad(g);
        });
    }
    return out;
}

// LayerNorm over the last dimension with population variance and an eps guard
// inside the square root: out = gamma * (v - mean) / sqrt(var + eps) + beta.
template <typename T>
TensorT<T> layer_norm(TapeT<T>& tape, const TensorT<T>& x, const TensorT<T>& gamma,
                      const TensorT<T>& beta, T eps = T(1e-5)) {
    if (x.rank() < 1) shape_error("layer_norm requires rank >= 1");
    const int64_t n = x.dim(static_cast<int>(x.rank()) - 1);
    if (gamma.rank() != 1 || gamma.dim(0) != n || beta.rank() != 1 || beta.dim(0) != n)
        shape_error("layer_norm: gamma/beta must match the normalized dimension " + std::to_string(n));
    if (!(eps > T(0))) value_error("layer_norm eps must be positive");
    const int64_t rows = x.size() / n;
    auto out = TensorT<T>::zeros(x.shape());
    auto xhat = std::make_shared<std::vector<T>>(x.data().size());
    auto inv_sigma = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
    auto xv = x.data();
    auto gv = gamma.data();
    auto bv = beta.data();
    auto ov = out.data();
    for (int64_t r = 0; r < rows; ++r) {
        const size_t base = static_cast<size_t>(r * n);
        T mean = T(0);
        for (int64_t j = 0; j < n; ++j) mean += xv[base + static_cast<size_t>(j)];
        mean /= static_cast<T>(n);
        T var = T(0);
        for (int64_t j = 0; j < n; ++j) {
            const T d = xv[base + static_cast<size_t>(j)] - mean;
            var += d * d;
        }
        var /= static_cast<T>(n);
        const T inv = T(1) / std::sqrt(var + eps);
        (*inv_sigma)[static_cast<size_t>(r)] = inv;
        for (int64_t j = 0; j < n; ++j) {
            const size_t idx = base + static_cast<size_t>(j);
            const T xh = (xv[idx] - mean) * inv;
            (*xhat)[idx] = xh;
            ov[idx] = gv[static_cast<size_t>(j)] * xh + bv[static_cast<size_t>(j)];
        }
    }
    detail::check_finite(out, "layer_norm");
    if (detail::want_node(tape, x.requires_grad() || gamma.requires_grad() || beta.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([x = x, gamma = gamma, beta = beta, out = out, xhat, inv_sigma, rows, n]() mutable {
            if (!out.has_grad()) return;
            auto go = out.grad();
            auto gv2 = gamma.data();
            std::vector<T> gx;
            if (x.requires_grad()) gx.assign(go.size(), T(0));
            std::vector<T> gg(static_cast<size_t>(n), T(0));
            std::vector<T> gb(static_cast<size_t>(n), T(0));
            for (int64_t r = 0; r < rows; ++r) {
                const size_t base = static_cast<size_t>(r * n);
                T sum_g = T(0), sum_gx = T(0);
                for (int64_t j = 0; j < n; ++j) {
                    const size_t idx = base + static_cast<size_t>(j);
                    const T gj = go[idx] * gv2[static_cast<size_t>(j)];
                    sum_g += gj;
                    sum_gx += gj * (*xhat)[idx];
                    gg[static_cast<size_t>(j)] += go[idx] * (*xhat)[idx];
                    gb[static_cast<size_t>(j)] += go[idx];
                }
                if (x.requires_grad()) {
                    const T inv = (*inv_sigma)[static_cast<size_t>(r)];
                    const T mean_g = sum_g / static_cast<T>(n);
                    const T mean_gx = sum_gx / static_cast<T>(n);
                    for (int64_t j = 0; j < n; ++j) {
                        const size_t idx = base + static_cast<size_t>(j);
                        const T gj = go[idx] * gv2[static_cast<size_t>(j)];
                        gx[idx] = inv * (gj - mean_g - (*xhat)[idx] * mean_gx);
                    }
                }
            }
            if (x.requires_grad()) x.accumulate_grad(gx);
            if (gamma.requires_grad()) gamma.accumulate_grad(gg);
            if (beta.requires_grad()) beta.accumulate_grad(gb);
        });
    }
    return out;
}

// Replaces entries above the diagonal of a square score matrix with a large
// negative constant so a following softmax assigns them exactly zero weight.
inline constexpr double kCausalMaskFill = -1e9;

template <typename T>
TensorT<T> causal_mask_fill(TapeT<T>& tape, const TensorT<T>& scores) {
    if (scores.rank() != 2 || scores.dim(0) != scores.dim(1))
        shape_error("causal_mask_fill requires a square matrix, got " + shape_str(scores.shape()));
    const int64_t n = scores.dim(0);
    auto out = TensorT<T>::zeros(scores.shape());
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j)
            out.at(i, j) = j <= i ? scores.at(i, j) : T(kCausalMaskFill);
    if (detail::want_node(tape, scores.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([scores = scores, out = out, n]() mutable {
            if (!out.has_grad()) return;
            std::vector<T> g(static_cast<size_t>(n * n), T(0));
            for (int64_t i = 0; i < n; ++i)
                for (int64_t j = 0; j <= i; ++j)
                    g[static_cast<size_t>(i * n + j)] = out.grad()[static_cast<size_t>(i * n + j)];
            scores.accumulate_grad(g);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> mse_loss(TapeT<T>& tape, const TensorT<T>& pred, const TensorT<T>& target) {
    if (pred.shape() != target.shape())
        shape_error("mse_loss: shapes differ " + shape_str(pred.shape()) + " vs " +
                    shape_str(target.shape()));
    const int64_t n = pred.size();
    auto pv = pred.data();
    auto tv = target.data();
    T acc = T(0);
    for (int64_t i = 0; i < n; ++i) {
        const T d = pv[static_cast<size_t>(i)] - tv[static_cast<size_t>(i)];
        acc += d * d;
    }
    auto out = TensorT<T>::scalar(acc / static_cast<T>(n));
    detail::check_finite(out, "mse_loss");
    if (detail::want_node(tape, pred.requires_grad() || target.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([pred = pred, target = target, out = out, n]() mutable {
            if (!out.has_grad()) return;
            const T g0 = out.grad()[0];
            auto pv2 = pred.data();
            auto tv2 = target.data();
            std::vector<T> g(static_cast<size_t>(n));
            const T c = T(2) / static_cast<T>(n) * g0;
            for (int64_t i = 0; i < n; ++i)
                g[static_cast<size_t>(i)] = c * (pv2[static_cast<size_t>(i)] - tv2[static_cast<size_t>(i)]);
            if (pred.requires_grad()) pred.accumulate_grad(g);
            if (target.requires_grad()) {
                for (auto& v : g) v = -v;
                target.accumulate_grad(g);
            }
        });
    }
    return out;
}

// Mean over the batch of -log softmax(logits)[label], computed in log space.
// Logits must have exactly two columns; labels are 0 or 1.
template <typename T>
TensorT<T> cross_entropy_loss(TapeT<T>& tape, const TensorT<T>& logits,
                              const std::vector<int>& labels) {
    if (logits.rank() != 2 || logits.dim(1) != 2)
        shape_error("cross_entropy_loss expects logits of shape [batch x 2], got " +
                    shape_str(logits.shape()));
    const int64_t b = logits.dim(0);
    if (static_cast<int64_t>(labels.size()) != b)
        shape_error("cross_entropy_loss: batch size " + std::to_string(b) + " but " +
                    std::to_string(labels.size()) + " labels");
    for (int y : labels)
        if (y != 0 && y != 1) value_error("cross_entropy_loss: labels must be 0 or 1, got " + std::to_string(y));
    T acc = T(0);
    for (int64_t i = 0; i < b; ++i) {
        const T l0 = logits.at(i, 0), l1 = logits.at(i, 1);
        const T mx = std::max(l0, l1);
        const T lse = mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
        acc += lse - logits.at(i, labels[static_cast<size_t>(i)]);
    }
    auto out = TensorT<T>::scalar(acc / static_cast<T>(b));
    detail::check_finite(out, "cross_entropy_loss");
    if (detail::want_node(tape, logits.requires_grad())) {
        out.set_requires_grad(true);
        tape.record([logits = logits, labels, out = out, b]() mutable {
            if (!out.has_grad()) return;
            const T g0 = out.grad()[0];
            std::vector<T> g(static_cast<size_t>(b * 2));
            for (int64_t i = 0; i < b; ++i) {
                const T l0 = logits.at(i, 0), l1 = logits.at(i, 1);
                const T mx = std::max(l0, l1);
                const T e0 = std::exp(l0 - mx), e1 = std::exp(l1 - mx);
                const T inv = T(1) / (e0 + e1);
                const T p0 = e0 * inv, p1 = e1 * inv;
                const int y = labels[static_cast<size_t>(i)];
                g[static_cast<size_t>(i * 2 + 0)] = g0 * (p0 - (y == 0 ? T(1) : T(0))) / static_cast<T>(b);
                g[static_cast<size_t>(i * 2 + 1)] = g0 * (p1 - (y == 1 ? T(1) : T(0))) / static_cast<T>(b);
            }
            logits.accumulate_grad(g);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// gradient utilities
// ---------------------------------------------------------------------------

// Scales the gradient buffers of `params` so their global L2 norm does not
// exceed `max_norm`; returns the pre-clip norm. Idempotent.
template <typename T>
double clip_global_norm(std::span<TensorT<T>> params, double max_norm) {
    if (!(max_norm > 0.0)) value_error("clip_global_norm: max_norm must be positive");
    double sq = 0.0;
    for (const auto& p : params)
        for (T v : p.grad()) sq += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const T factor = static_cast<T>(max_norm / norm);
        for (auto& p : params)
            for (T& v : p.grad_mut()) v *= factor;
    }
    return norm;
}

template <typename T>
double clip_global_norm(std::vector<TensorT<T>>& params, double max_norm) {
    return clip_global_norm(std::span<TensorT<T>>(params), max_norm);
}

}  // namespace sslchrono
