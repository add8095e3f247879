#include "trendkern/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace trendkern::num {

namespace {

[[noreturn]] void shape_error(const char* op, const std::vector<int>& a, const std::vector<int>& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void shape_error(const char* op, const std::vector<int>& a) {
    throw std::invalid_argument(std::string(op) + ": unsupported shape " + shape_str(a));
}

}  // namespace

void matmul_nn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<size_t>(i) * k;
        double* crow = c + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

void matmul_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int kk = 0; kk < k; ++kk) {
        const double* arow = a + static_cast<size_t>(kk) * m;
        const double* brow = b + static_cast<size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            const double aki = arow[i];
            double* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += aki * brow[j];
        }
    }
}

ValueId Tape::push(Tensor value, BackFn back, const char* op) {
    if (!value.all_finite()) {
        throw std::runtime_error(std::string(op) + ": produced a non-finite value");
    }
    nodes_.push_back(Node{std::move(value), std::move(back)});
    grads_.emplace_back();
    touched_.push_back(0);
    return static_cast<ValueId>(nodes_.size() - 1);
}

Tensor& Tape::grad_buf(ValueId id) {
    auto idx = static_cast<size_t>(id);
    if (!touched_[idx]) {
        grads_[idx] = Tensor::zeros(nodes_[idx].value.shape());
        touched_[idx] = 1;
    }
    return grads_[idx];
}

const Tensor& Tape::grad(ValueId id) { return grad_buf(id); }

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
    touched_.clear();
}

void Tape::backward(ValueId loss) {
    const Tensor& lv = value(loss);
    if (lv.numel() != 1) {
        throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_str(lv.shape()));
    }
    grad_buf(loss).at(0) = 1.0;
    for (ValueId id = loss; id >= 0; --id) {
        const Node& node = nodes_[static_cast<size_t>(id)];
        if (!node.back || !grad_touched(id)) continue;
        node.back(*this, id);
    }
}

ValueId Tape::leaf(Tensor value) { return push(std::move(value), {}, "leaf"); }

ValueId Tape::matmul(ValueId a, ValueId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0)) shape_error("matmul", ta.shape(), tb.shape());
    const int m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    Tensor out = Tensor::zeros({m, n});
    matmul_nn_acc(ta.data(), tb.data(), out.data(), m, k, n);
    auto back = [a, b, m, k, n](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        // dA += g * B^T; B is small, transpose once and stream.
        const Tensor& vb = t.value(b);
        Tensor bt = Tensor::zeros({n, k});
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) bt.at(j, i) = vb.at(i, j);
        matmul_nn_acc(g.data(), bt.data(), t.grad_buf(a).data(), m, n, k);
        // dB += A^T * g
        matmul_tn_acc(t.value(a).data(), g.data(), t.grad_buf(b).data(), k, m, n);
    };
    return push(std::move(out), std::move(back), "matmul");
}

ValueId Tape::add(ValueId a, ValueId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.same_shape(tb)) {
        Tensor out = ta;
        double* po = out.data();
        const double* pb = tb.data();
        for (size_t i = 0; i < out.numel(); ++i) po[i] += pb[i];
        auto back = [a, b](Tape& t, ValueId self) {
            const Tensor& g = t.grad_buf(self);
            double* ga = t.grad_buf(a).data();
            double* gb = t.grad_buf(b).data();
            const double* pg = g.data();
            for (size_t i = 0; i < g.numel(); ++i) {
                ga[i] += pg[i];
                gb[i] += pg[i];
            }
        };
        return push(std::move(out), std::move(back), "add");
    }
    if (ta.rank() == 2 && tb.rank() == 1 && ta.dim(1) == tb.dim(0)) {
        const int m = ta.dim(0), n = ta.dim(1);
        Tensor out = ta;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) out.at(i, j) += tb.at(j);
        auto back = [a, b, m, n](Tape& t, ValueId self) {
            const Tensor& g = t.grad_buf(self);
            Tensor& ga = t.grad_buf(a);
            Tensor& gb = t.grad_buf(b);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    ga.at(i, j) += g.at(i, j);
                    gb.at(j) += g.at(i, j);
                }
        };
        return push(std::move(out), std::move(back), "add");
    }
    shape_error("add", ta.shape(), tb.shape());
}

ValueId Tape::mul(ValueId a, ValueId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) shape_error("mul", ta.shape(), tb.shape());
    Tensor out = ta;
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] *= tb.data()[i];
    auto back = [a, b](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const double* va = t.value(a).data();
        const double* vb = t.value(b).data();
        double* ga = t.grad_buf(a).data();
        double* gb = t.grad_buf(b).data();
        for (size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g.data()[i] * vb[i];
            gb[i] += g.data()[i] * va[i];
        }
    };
    return push(std::move(out), std::move(back), "mul");
}

ValueId Tape::concat(const std::vector<ValueId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no operands");
    const Tensor& first = value(parts[0]);
    const int rank = first.rank();
    int total_last = 0;
    for (ValueId p : parts) {
        const Tensor& tp = value(p);
        if (tp.rank() != rank) shape_error("concat", first.shape(), tp.shape());
        if (rank == 2 && tp.dim(0) != first.dim(0)) shape_error("concat", first.shape(), tp.shape());
        total_last += tp.dim(rank - 1);
    }
    const int rows = rank == 2 ? first.dim(0) : 1;
    Tensor out = rank == 2 ? Tensor::zeros({rows, total_last}) : Tensor::zeros({total_last});
    int col = 0;
    for (ValueId p : parts) {
        const Tensor& tp = value(p);
        const int w = tp.dim(rank - 1);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < w; ++j) out.data()[static_cast<size_t>(i) * total_last + col + j] =
                tp.data()[static_cast<size_t>(i) * w + j];
        col += w;
    }
    auto back = [parts, rows, total_last](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        int col2 = 0;
        for (ValueId p : parts) {
            Tensor& gp = t.grad_buf(p);
            const int w = t.value(p).dim(t.value(p).rank() - 1);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < w; ++j)
                    gp.data()[static_cast<size_t>(i) * w + j] += g.data()[static_cast<size_t>(i) * total_last + col2 + j];
            col2 += w;
        }
    };
    return push(std::move(out), std::move(back), "concat");
}

ValueId Tape::slice_cols(ValueId a, int lo, int hi) {
    const Tensor& ta = value(a);
    const int rank = ta.rank();
    const int width = ta.dim(rank - 1);
    if (lo < 0 || hi > width || lo >= hi) {
        throw std::invalid_argument("slice: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                    ") out of bounds for shape " + shape_str(ta.shape()));
    }
    const int rows = rank == 2 ? ta.dim(0) : 1;
    const int w = hi - lo;
    Tensor out = rank == 2 ? Tensor::zeros({rows, w}) : Tensor::zeros({w});
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < w; ++j)
            out.data()[static_cast<size_t>(i) * w + j] = ta.data()[static_cast<size_t>(i) * width + lo + j];
    auto back = [a, lo, w, rows, width](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& ga = t.grad_buf(a);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < w; ++j)
                ga.data()[static_cast<size_t>(i) * width + lo + j] += g.data()[static_cast<size_t>(i) * w + j];
    };
    return push(std::move(out), std::move(back), "slice");
}

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

ValueId Tape::sigmoid(ValueId a) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = stable_sigmoid(out.data()[i]);
    auto back = [a](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& y = t.value(self);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) ga[i] += g.data()[i] * y.data()[i] * (1.0 - y.data()[i]);
    };
    return push(std::move(out), std::move(back), "sigmoid");
}

ValueId Tape::tanh(ValueId a) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = std::tanh(out.data()[i]);
    auto back = [a](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& y = t.value(self);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) ga[i] += g.data()[i] * (1.0 - y.data()[i] * y.data()[i]);
    };
    return push(std::move(out), std::move(back), "tanh");
}

ValueId Tape::relu(ValueId a) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = out.data()[i] > 0.0 ? out.data()[i] : 0.0;
    auto back = [a](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& x = t.value(a);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) ga[i] += x.data()[i] > 0.0 ? g.data()[i] : 0.0;
    };
    return push(std::move(out), std::move(back), "relu");
}

ValueId Tape::square(ValueId a) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] *= out.data()[i];
    auto back = [a](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& x = t.value(a);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) ga[i] += 2.0 * x.data()[i] * g.data()[i];
    };
    return push(std::move(out), std::move(back), "square");
}

ValueId Tape::abs(ValueId a) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] = std::fabs(out.data()[i]);
    auto back = [a](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& x = t.value(a);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) {
            // Subgradient 0 at the kink.
            if (x.data()[i] > 0.0) ga[i] += g.data()[i];
            else if (x.data()[i] < 0.0) ga[i] -= g.data()[i];
        }
    };
    return push(std::move(out), std::move(back), "abs");
}

ValueId Tape::mean(ValueId a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (size_t i = 0; i < ta.numel(); ++i) acc += ta.data()[i];
    const double inv_n = 1.0 / static_cast<double>(ta.numel());
    Tensor out = Tensor::scalar(acc * inv_n);
    auto back = [a, inv_n](Tape& t, ValueId self) {
        const double g = t.grad_buf(self).at(0);
        Tensor& ga = t.grad_buf(a);
        for (size_t i = 0; i < ga.numel(); ++i) ga.data()[i] += g * inv_n;
    };
    return push(std::move(out), std::move(back), "mean");
}

ValueId Tape::sum(ValueId a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (size_t i = 0; i < ta.numel(); ++i) acc += ta.data()[i];
    Tensor out = Tensor::scalar(acc);
    auto back = [a](Tape& t, ValueId self) {
        const double g = t.grad_buf(self).at(0);
        Tensor& ga = t.grad_buf(a);
        for (size_t i = 0; i < ga.numel(); ++i) ga.data()[i] += g;
    };
    return push(std::move(out), std::move(back), "sum");
}

ValueId Tape::euclidean_distance(ValueId a, ValueId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.rank() != 2 || !ta.same_shape(tb)) shape_error("euclidean-distance", ta.shape(), tb.shape());
    const int rows = ta.dim(0), cols = ta.dim(1);
    Tensor out = Tensor::zeros({rows});
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double d = ta.at(i, j) - tb.at(i, j);
            s += d * d;
        }
        out.at(i) = std::sqrt(s);
    }
    auto back = [a, b, rows, cols](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& d = t.value(self);
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        Tensor& ga = t.grad_buf(a);
        Tensor& gb = t.grad_buf(b);
        for (int i = 0; i < rows; ++i) {
            if (d.at(i) <= 0.0) continue;  // subgradient 0 at coincident rows
            const double scale = g.at(i) / d.at(i);
            for (int j = 0; j < cols; ++j) {
                const double diff = (va.at(i, j) - vb.at(i, j)) * scale;
                ga.at(i, j) += diff;
                gb.at(i, j) -= diff;
            }
        }
    };
    return push(std::move(out), std::move(back), "euclidean-distance");
}

ValueId Tape::gather(ValueId table, std::vector<int> ids) {
    const Tensor& tt = value(table);
    if (tt.rank() != 2) shape_error("embedding-gather", tt.shape());
    const int vocab = tt.dim(0), feat = tt.dim(1);
    const int rows = static_cast<int>(ids.size());
    if (rows == 0) throw std::invalid_argument("embedding-gather: empty id list");
    for (int id : ids) {
        if (id < 0 || id >= vocab) {
            throw std::out_of_range("embedding-gather: id " + std::to_string(id) + " outside table " +
                                    shape_str(tt.shape()));
        }
    }
    Tensor out = Tensor::zeros({rows, feat});
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < feat; ++j) out.at(i, j) = tt.at(ids[static_cast<size_t>(i)], j);
    auto back = [table, ids = std::move(ids), feat](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        Tensor& gt = t.grad_buf(table);
        for (size_t i = 0; i < ids.size(); ++i)
            for (int j = 0; j < feat; ++j) gt.at(ids[i], j) += g.at(static_cast<int>(i), j);
    };
    return push(std::move(out), std::move(back), "embedding-gather");
}

ValueId Tape::l2_normalize(ValueId a) {
    const Tensor& ta = value(a);
    const int rank = ta.rank();
    const int cols = ta.dim(rank - 1);
    const int rows = rank == 2 ? ta.dim(0) : 1;
    Tensor out = ta;
    std::vector<double> norms(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < cols; ++j) {
            const double v = ta.data()[static_cast<size_t>(i) * cols + j];
            s += v * v;
        }
        const double norm = std::sqrt(s);
        if (norm == 0.0) throw std::domain_error("l2-normalize: zero-norm row " + std::to_string(i));
        norms[static_cast<size_t>(i)] = norm;
        for (int j = 0; j < cols; ++j) out.data()[static_cast<size_t>(i) * cols + j] /= norm;
    }
    auto back = [a, rows, cols, norms = std::move(norms)](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        const Tensor& y = t.value(self);
        Tensor& ga = t.grad_buf(a);
        for (int i = 0; i < rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < cols; ++j)
                dot += g.data()[static_cast<size_t>(i) * cols + j] * y.data()[static_cast<size_t>(i) * cols + j];
            const double inv_norm = 1.0 / norms[static_cast<size_t>(i)];
            for (int j = 0; j < cols; ++j) {
                const size_t idx = static_cast<size_t>(i) * cols + j;
                ga.data()[idx] += (g.data()[idx] - y.data()[idx] * dot) * inv_norm;
            }
        }
    };
    return push(std::move(out), std::move(back), "l2-normalize");
}

ValueId Tape::scale(ValueId a, double factor) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] *= factor;
    auto back = [a, factor](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) ga[i] += factor * g.data()[i];
    };
    return push(std::move(out), std::move(back), "scale");
}

ValueId Tape::add_scalar(ValueId a, double constant) {
    Tensor out = value(a);
    for (size_t i = 0; i < out.numel(); ++i) out.data()[i] += constant;
    auto back = [a](Tape& t, ValueId self) {
        const Tensor& g = t.grad_buf(self);
        double* ga = t.grad_buf(a).data();
        for (size_t i = 0; i < g.numel(); ++i) ga[i] += g.data()[i];
    };
    return push(std::move(out), std::move(back), "add-scalar");
}

}  // namespace trendkern::num
