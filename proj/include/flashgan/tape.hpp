#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "flashgan/error.hpp"
#include "flashgan/matrix.hpp"
#include "flashgan/rng.hpp"
#include "flashgan/textio.hpp"

namespace flashgan {

enum class Init { kaiming, zero };

// Named f64 tensors with a shape registry. Initialization is keyed by
// (seed, name), so it is independent of registration order.
class ParamStore {
public:
    void def(const std::string& name, int rows, int cols, Init init = Init::kaiming) {
        if (entries_.count(name)) throw ContractError("param '" + name + "' already registered");
        order_.push_back(name);
        entries_[name] = Entry{Matrix(rows, cols), init};
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    Matrix& get(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ContractError("unknown param '" + name + "'");
        return it->second.value;
    }

    const Matrix& get(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ContractError("unknown param '" + name + "'");
        return it->second.value;
    }

    const std::vector<std::string>& names() const { return order_; }

    size_t total_params() const {
        size_t n = 0;
        for (const auto& [k, e] : entries_) {
            (void)k;
            n += e.value.size();
        }
        return n;
    }

    // Kaiming-uniform with fan-in = rows (weights left-multiply as x @ W),
    // gain for LeakyReLU slope 0.2; zero-init tensors stay zero.
    void init_params(uint64_t seed) {
        const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
        for (const auto& name : order_) {
            Entry& e = entries_[name];
            if (e.init == Init::zero) {
                e.value = Matrix(e.value.rows, e.value.cols);
                continue;
            }
            RngStream rng = RngStream::derive(seed, {fnv1a64(name)});
            const double bound = gain * std::sqrt(3.0 / static_cast<double>(e.value.rows > 0 ? e.value.rows : 1));
            for (double& v : e.value.a) v = (2.0 * rng.uniform01() - 1.0) * bound;
        }
    }

private:
    struct Entry {
        Matrix value;
        Init init = Init::kaiming;
    };
    std::vector<std::string> order_;
    std::map<std::string, Entry> entries_;
};

// Accumulated gradients keyed by parameter name; ordered map keeps merge and
// update order deterministic.
using GradStore = std::map<std::string, Matrix>;

inline void grad_accumulate(GradStore& into, const std::string& name, const Matrix& g) {
    auto it = into.find(name);
    if (it == into.end())
        into.emplace(name, g);
    else
        add_in_place(it->second, g);
}

using ValueId = int;

// Reverse-mode tape over matrix primitives. Ops are recorded in construction
// order, which is a topological order; backward visits them exactly reversed.
class Tape {
public:
    ValueId constant(Matrix v) { return push(std::move(v), false); }

    ValueId param(const ParamStore& ps, const std::string& name) {
        const ValueId id = push(ps.get(name), true);
        nodes_[static_cast<size_t>(id)].pname = name;
        return id;
    }

    const Matrix& value(ValueId id) const { return nodes_[static_cast<size_t>(id)].val; }

    double scalar(ValueId id) const {
        const Matrix& m = value(id);
        if (m.rows != 1 || m.cols != 1) throw ContractError("scalar: value is " + shape_str(m));
        return m.a[0];
    }

    ValueId matmul(ValueId a, ValueId b) {
        const ValueId out = push(flashgan::matmul(value(a), value(b)), needs(a) || needs(b));
        if (needs(out))
            nodes_[static_cast<size_t>(out)].back = [a, b](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                if (t.needs(a)) add_in_place(t.grad_slot(a), flashgan::matmul(go, transpose(t.value(b))));
                if (t.needs(b)) add_in_place(t.grad_slot(b), flashgan::matmul(transpose(t.value(a)), go));
            };
        return out;
    }

    ValueId add(ValueId a, ValueId b) {
        const ValueId out = push(flashgan::add(value(a), value(b)), needs(a) || needs(b));
        if (needs(out))
            nodes_[static_cast<size_t>(out)].back = [a, b](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                if (t.needs(a)) add_in_place(t.grad_slot(a), go);
                if (t.needs(b)) add_in_place(t.grad_slot(b), go);
            };
        return out;
    }

    // a (n,d) + bias row (1,d) broadcast over rows.
    ValueId add_row(ValueId a, ValueId bias) {
        const Matrix& A = value(a);
        const Matrix& B = value(bias);
        if (B.rows != 1 || B.cols != A.cols)
            throw DimensionError("add_row: bias " + shape_str(B) + " vs " + shape_str(A));
        Matrix out = A;
        for (int i = 0; i < out.rows; ++i)
            for (int j = 0; j < out.cols; ++j) out(i, j) += B(0, j);
        const ValueId id = push(std::move(out), needs(a) || needs(bias));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, bias](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                if (t.needs(a)) add_in_place(t.grad_slot(a), go);
                if (t.needs(bias)) {
                    Matrix& gb = t.grad_slot(bias);
                    for (int i = 0; i < go.rows; ++i)
                        for (int j = 0; j < go.cols; ++j) gb(0, j) += go(i, j);
                }
            };
        return id;
    }

    ValueId mul(ValueId a, ValueId b) {
        check_same_shape(value(a), value(b), "mul");
        Matrix out = value(a);
        for (size_t i = 0; i < out.a.size(); ++i) out.a[i] *= value(b).a[i];
        const ValueId id = push(std::move(out), needs(a) || needs(b));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, b](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                if (t.needs(a)) {
                    Matrix& ga = t.grad_slot(a);
                    for (size_t i = 0; i < go.a.size(); ++i) ga.a[i] += go.a[i] * t.value(b).a[i];
                }
                if (t.needs(b)) {
                    Matrix& gb = t.grad_slot(b);
                    for (size_t i = 0; i < go.a.size(); ++i) gb.a[i] += go.a[i] * t.value(a).a[i];
                }
            };
        return id;
    }

    // alpha * a + beta, elementwise.
    ValueId affine(ValueId a, double alpha, double beta) {
        Matrix out = value(a);
        for (double& v : out.a) v = alpha * v + beta;
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, alpha](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (size_t i = 0; i < go.a.size(); ++i) ga.a[i] += alpha * go.a[i];
            };
        return id;
    }

    ValueId leaky_relu(ValueId a, double slope) {
        Matrix out = value(a);
        for (double& v : out.a)
            if (v <= 0.0) v *= slope;
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, slope](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (size_t i = 0; i < go.a.size(); ++i)
                    ga.a[i] += go.a[i] * (t.value(a).a[i] > 0.0 ? 1.0 : slope);
            };
        return id;
    }

    ValueId log(ValueId a) {
        Matrix out = value(a);
        for (double& v : out.a) v = std::log(v);
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (size_t i = 0; i < go.a.size(); ++i) ga.a[i] += go.a[i] / t.value(a).a[i];
            };
        return id;
    }

    // Row-wise softmax with max-shift stabilization.
    ValueId softmax_rows(ValueId a) {
        Matrix out = value(a);
        for (int i = 0; i < out.rows; ++i) {
            double mx = out(i, 0);
            for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out(i, j));
            double s = 0.0;
            for (int j = 0; j < out.cols; ++j) {
                out(i, j) = std::exp(out(i, j) - mx);
                s += out(i, j);
            }
            for (int j = 0; j < out.cols; ++j) out(i, j) /= s;
        }
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                const Matrix& y = t.value(self);
                Matrix& ga = t.grad_slot(a);
                for (int i = 0; i < y.rows; ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < y.cols; ++j) dot += go(i, j) * y(i, j);
                    for (int j = 0; j < y.cols; ++j) ga(i, j) += y(i, j) * (go(i, j) - dot);
                }
            };
        return id;
    }

    // Row-wise layer normalization without learned affine terms:
    // y = (x - mean) / sqrt(var + eps), population variance per row. Rows with
    // no spread map to zero. Bounds activations so downstream heads cannot be
    // driven into saturation by raw magnitude.
    ValueId layernorm_rows(ValueId a, double eps = 1e-6) {
        Matrix out = value(a);
        for (int i = 0; i < out.rows; ++i) {
            double mu = 0.0;
            for (int j = 0; j < out.cols; ++j) mu += out(i, j);
            mu /= out.cols;
            double var = 0.0;
            for (int j = 0; j < out.cols; ++j) var += (out(i, j) - mu) * (out(i, j) - mu);
            var /= out.cols;
            const double s = std::sqrt(var + eps);
            for (int j = 0; j < out.cols; ++j) out(i, j) = (out(i, j) - mu) / s;
        }
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, eps](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                const Matrix& y = t.value(self);
                const Matrix& x = t.value(a);
                Matrix& ga = t.grad_slot(a);
                for (int i = 0; i < y.rows; ++i) {
                    double mu = 0.0;
                    for (int j = 0; j < x.cols; ++j) mu += x(i, j);
                    mu /= x.cols;
                    double var = 0.0;
                    for (int j = 0; j < x.cols; ++j) var += (x(i, j) - mu) * (x(i, j) - mu);
                    var /= x.cols;
                    const double s = std::sqrt(var + eps);
                    double gmean = 0.0, gymean = 0.0;
                    for (int j = 0; j < y.cols; ++j) {
                        gmean += go(i, j);
                        gymean += go(i, j) * y(i, j);
                    }
                    gmean /= y.cols;
                    gymean /= y.cols;
                    for (int j = 0; j < y.cols; ++j)
                        ga(i, j) += (go(i, j) - gmean - y(i, j) * gymean) / s;
                }
            };
        return id;
    }

    // Row-wise log-softmax via max-shift + log-sum-exp. Stays finite even when
    // a row is saturated and softmax would round a probability to 0 or 1.
    ValueId log_softmax_rows(ValueId a) {
        Matrix out = value(a);
        for (int i = 0; i < out.rows; ++i) {
            double mx = out(i, 0);
            for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out(i, j));
            double s = 0.0;
            for (int j = 0; j < out.cols; ++j) s += std::exp(out(i, j) - mx);
            const double lse = mx + std::log(s);
            for (int j = 0; j < out.cols; ++j) out(i, j) -= lse;
        }
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                const Matrix& y = t.value(self); // log-probabilities
                Matrix& ga = t.grad_slot(a);
                for (int i = 0; i < y.rows; ++i) {
                    double gsum = 0.0;
                    for (int j = 0; j < y.cols; ++j) gsum += go(i, j);
                    for (int j = 0; j < y.cols; ++j) ga(i, j) += go(i, j) - std::exp(y(i, j)) * gsum;
                }
            };
        return id;
    }

    ValueId concat_cols(ValueId a, ValueId b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (A.rows != B.rows) throw DimensionError("concat_cols: " + shape_str(A) + " vs " + shape_str(B));
        Matrix out(A.rows, A.cols + B.cols);
        for (int i = 0; i < A.rows; ++i) {
            for (int j = 0; j < A.cols; ++j) out(i, j) = A(i, j);
            for (int j = 0; j < B.cols; ++j) out(i, A.cols + j) = B(i, j);
        }
        const ValueId id = push(std::move(out), needs(a) || needs(b));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, b](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                const int ac = t.value(a).cols;
                if (t.needs(a)) {
                    Matrix& ga = t.grad_slot(a);
                    for (int i = 0; i < ga.rows; ++i)
                        for (int j = 0; j < ga.cols; ++j) ga(i, j) += go(i, j);
                }
                if (t.needs(b)) {
                    Matrix& gb = t.grad_slot(b);
                    for (int i = 0; i < gb.rows; ++i)
                        for (int j = 0; j < gb.cols; ++j) gb(i, j) += go(i, ac + j);
                }
            };
        return id;
    }

    ValueId concat_rows(ValueId a, ValueId b) {
        const Matrix& A = value(a);
        const Matrix& B = value(b);
        if (A.cols != B.cols) throw DimensionError("concat_rows: " + shape_str(A) + " vs " + shape_str(B));
        Matrix out(A.rows + B.rows, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) out(i, j) = A(i, j);
        for (int i = 0; i < B.rows; ++i)
            for (int j = 0; j < B.cols; ++j) out(A.rows + i, j) = B(i, j);
        const ValueId id = push(std::move(out), needs(a) || needs(b));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, b](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                const int ar = t.value(a).rows;
                if (t.needs(a)) {
                    Matrix& ga = t.grad_slot(a);
                    for (int i = 0; i < ga.rows; ++i)
                        for (int j = 0; j < ga.cols; ++j) ga(i, j) += go(i, j);
                }
                if (t.needs(b)) {
                    Matrix& gb = t.grad_slot(b);
                    for (int i = 0; i < gb.rows; ++i)
                        for (int j = 0; j < gb.cols; ++j) gb(i, j) += go(ar + i, j);
                }
            };
        return id;
    }

    // Column slice as an (n,1) matrix.
    ValueId col(ValueId a, int j) {
        const Matrix& A = value(a);
        if (j < 0 || j >= A.cols) throw DimensionError("col: index out of range");
        Matrix out(A.rows, 1);
        for (int i = 0; i < A.rows; ++i) out(i, 0) = A(i, j);
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, j](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (int i = 0; i < go.rows; ++i) ga(i, j) += go(i, 0);
            };
        return id;
    }

    ValueId gather_rows(ValueId a, std::vector<int> idx) {
        const Matrix& A = value(a);
        Matrix out(static_cast<int>(idx.size()), A.cols);
        for (size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] < 0 || idx[i] >= A.rows) throw DimensionError("gather_rows: index out of range");
            for (int j = 0; j < A.cols; ++j) out(static_cast<int>(i), j) = A(idx[i], j);
        }
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, idx = std::move(idx)](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (size_t i = 0; i < idx.size(); ++i)
                    for (int j = 0; j < go.cols; ++j) ga(idx[i], j) += go(static_cast<int>(i), j);
            };
        return id;
    }

    // Mean of input rows sharing a destination; destinations with no inputs
    // stay zero (empty-neighborhood convention).
    ValueId scatter_mean(ValueId a, std::vector<int> dst, int n_out) {
        const Matrix& A = value(a);
        if (static_cast<int>(dst.size()) != A.rows)
            throw DimensionError("scatter_mean: index count != row count");
        std::vector<int> cnt(static_cast<size_t>(n_out), 0);
        for (int d : dst) {
            if (d < 0 || d >= n_out) throw DimensionError("scatter_mean: destination out of range");
            ++cnt[static_cast<size_t>(d)];
        }
        Matrix out(n_out, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) out(dst[static_cast<size_t>(i)], j) += A(i, j);
        for (int b = 0; b < n_out; ++b)
            if (cnt[static_cast<size_t>(b)] > 1)
                for (int j = 0; j < A.cols; ++j) out(b, j) /= cnt[static_cast<size_t>(b)];
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, dst = std::move(dst), cnt = std::move(cnt)](Tape& t,
                                                                                                   ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (int i = 0; i < ga.rows; ++i) {
                    const int b = dst[static_cast<size_t>(i)];
                    const double w = 1.0 / cnt[static_cast<size_t>(b)];
                    for (int j = 0; j < ga.cols; ++j) ga(i, j) += go(b, j) * w;
                }
            };
        return id;
    }

    // (n,1) with out(i,0) = a(i, cols[i]).
    ValueId pick_per_row(ValueId a, std::vector<int> cols) {
        const Matrix& A = value(a);
        if (static_cast<int>(cols.size()) != A.rows)
            throw DimensionError("pick_per_row: index count != row count");
        Matrix out(A.rows, 1);
        for (int i = 0; i < A.rows; ++i) {
            if (cols[static_cast<size_t>(i)] < 0 || cols[static_cast<size_t>(i)] >= A.cols)
                throw DimensionError("pick_per_row: column out of range");
            out(i, 0) = A(i, cols[static_cast<size_t>(i)]);
        }
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a, cols = std::move(cols)](Tape& t, ValueId self) {
                const Matrix& go = t.grad_of(self);
                Matrix& ga = t.grad_slot(a);
                for (int i = 0; i < go.rows; ++i) ga(i, cols[static_cast<size_t>(i)]) += go(i, 0);
            };
        return id;
    }

    ValueId sum_all(ValueId a) {
        double s = 0.0;
        for (double v : value(a).a) s += v;
        Matrix out(1, 1);
        out.a[0] = s;
        const ValueId id = push(std::move(out), needs(a));
        if (needs(id))
            nodes_[static_cast<size_t>(id)].back = [a](Tape& t, ValueId self) {
                const double gs = t.grad_of(self).a[0];
                Matrix& ga = t.grad_slot(a);
                for (double& v : ga.a) v += gs;
            };
        return id;
    }

    ValueId mean_all(ValueId a) {
        const double n = static_cast<double>(value(a).size());
        if (n == 0) throw DimensionError("mean_all: empty matrix");
        return affine(sum_all(a), 1.0 / n, 0.0);
    }

    // Seeds d(loss)/d(loss) = 1, sweeps recorded ops in reverse, and merges
    // parameter gradients into `grads`. One backward per tape.
    void backward(ValueId loss, GradStore& grads) {
        const Matrix& lv = value(loss);
        if (lv.rows != 1 || lv.cols != 1) throw ContractError("backward: loss must be scalar, got " + shape_str(lv));
        if (ran_backward_) throw ContractError("backward: tape already consumed");
        ran_backward_ = true;
        grad_slot(loss).a[0] = 1.0;
        for (ValueId id = loss; id >= 0; --id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (n.grad_live && n.back) n.back(*this, id);
        }
        for (const Node& n : nodes_)
            if (!n.pname.empty() && n.grad_live) grad_accumulate(grads, n.pname, n.grad);
    }

    // Gradient wrt a non-parameter slot after backward (test access).
    const Matrix& grad_view(ValueId id) {
        return grad_slot(id);
    }

private:
    struct Node {
        Matrix val;
        Matrix grad;
        bool needs_grad = false;
        bool grad_live = false;
        std::string pname;
        std::function<void(Tape&, ValueId)> back;
    };

    std::vector<Node> nodes_;
    bool ran_backward_ = false;

    bool needs(ValueId id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

    ValueId push(Matrix v, bool needs_grad) {
        nodes_.push_back(Node{std::move(v), Matrix(), needs_grad, false, std::string(), nullptr});
        return static_cast<ValueId>(nodes_.size() - 1);
    }

    const Matrix& grad_of(ValueId id) { return grad_slot(id); }

    Matrix& grad_slot(ValueId id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.grad_live) {
            n.grad = Matrix::zeros_like(n.val);
            n.grad_live = true;
        }
        return n.grad;
    }
};

} // namespace flashgan
