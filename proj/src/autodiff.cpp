// Eager tape autodiff over dense double matrices. Builders compute values
// immediately and record parents; backward() walks the tape in reverse,
// accumulating into node gradients and finally into Param::grad. Gradients
// are only propagated along paths that can reach a parameter.

#include "gmner/autodiff.hpp"

#include "gmner/errors.hpp"

#include <cmath>

namespace gmner::ad {

namespace {
constexpr double kLayerNormEps = 1e-5;

void check(bool cond, const char* msg) {
    if (!cond) throw InvalidInputError(msg);
}
} // namespace

void Graph::clear() { nodes_.clear(); }

int Graph::push(Rec rec) {
    nodes_.push_back(std::move(rec));
    return static_cast<int>(nodes_.size()) - 1;
}

Mat& Graph::grad_of(int id) {
    Rec& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Mat(n.val.rows, n.val.cols);
        n.has_grad = true;
    }
    return n.grad;
}

Node Graph::param(Param& p) {
    Rec r;
    r.op = Op::Leaf;
    r.val = p.value;
    r.par = &p;
    r.needs_grad = true;
    return {this, push(std::move(r))};
}

Node Graph::constant(Mat m) {
    Rec r;
    r.op = Op::Constant;
    r.val = std::move(m);
    return {this, push(std::move(r))};
}

Node Graph::matmul(Node a, Node b) {
    check(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Rec r;
    r.op = Op::MatMul;
    r.a = a.id();
    r.b = b.id();
    gmner::matmul(a.value(), b.value(), r.val);
    r.needs_grad = needs(r.a) || needs(r.b);
    return {this, push(std::move(r))};
}

Node Graph::add(Node a, Node b) {
    check(a.value().same_shape(b.value()), "add: shape mismatch");
    Rec r;
    r.op = Op::Add;
    r.a = a.id();
    r.b = b.id();
    r.val = a.value();
    const Mat& bv = b.value();
    for (size_t i = 0; i < r.val.size(); ++i) r.val.a[i] += bv.a[i];
    r.needs_grad = needs(r.a) || needs(r.b);
    return {this, push(std::move(r))};
}

Node Graph::add_row(Node a, Node row) {
    check(row.rows() == 1 && row.cols() == a.cols(), "add_row: need 1xC row");
    Rec r;
    r.op = Op::AddRow;
    r.a = a.id();
    r.b = row.id();
    r.val = a.value();
    const double* rv = row.value().row(0);
    for (int i = 0; i < r.val.rows; ++i) {
        double* vr = r.val.row(i);
        for (int j = 0; j < r.val.cols; ++j) vr[j] += rv[j];
    }
    r.needs_grad = needs(r.a) || needs(r.b);
    return {this, push(std::move(r))};
}

Node Graph::scale(Node a, double s) {
    Rec r;
    r.op = Op::Scale;
    r.a = a.id();
    r.s0 = s;
    r.val = a.value();
    for (double& x : r.val.a) x *= s;
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::hadamard(Node a, Node b) {
    check(a.value().same_shape(b.value()), "hadamard: shape mismatch");
    Rec r;
    r.op = Op::Hadamard;
    r.a = a.id();
    r.b = b.id();
    r.val = a.value();
    for (size_t i = 0; i < r.val.size(); ++i) r.val.a[i] *= b.value().a[i];
    r.needs_grad = needs(r.a) || needs(r.b);
    return {this, push(std::move(r))};
}

Node Graph::relu(Node a) {
    Rec r;
    r.op = Op::Relu;
    r.a = a.id();
    r.val = a.value();
    for (double& x : r.val.a) x = x > 0.0 ? x : 0.0;
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::tanh_act(Node a) {
    Rec r;
    r.op = Op::Tanh;
    r.a = a.id();
    r.val = a.value();
    for (double& x : r.val.a) x = std::tanh(x);
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::sigmoid(Node a) {
    Rec r;
    r.op = Op::Sigmoid;
    r.a = a.id();
    r.val = a.value();
    for (double& x : r.val.a) x = 1.0 / (1.0 + std::exp(-x));
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::softmax_rows(Node a) {
    Rec r;
    r.op = Op::SoftmaxRows;
    r.a = a.id();
    r.val = a.value();
    for (int i = 0; i < r.val.rows; ++i) {
        double* row = r.val.row(i);
        double mx = row[0];
        for (int j = 1; j < r.val.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < r.val.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < r.val.cols; ++j) row[j] /= sum;
    }
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::transpose(Node a) {
    Rec r;
    r.op = Op::Transpose;
    r.a = a.id();
    const Mat& v = a.value();
    r.val = Mat(v.cols, v.rows);
    for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j) r.val.at(j, i) = v.at(i, j);
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::concat_rows(const std::vector<Node>& parts) {
    check(!parts.empty(), "concat_rows: empty");
    int total = 0;
    const int cols = parts[0].cols();
    for (const Node& p : parts) {
        check(p.cols() == cols, "concat_rows: column mismatch");
        total += p.rows();
    }
    Rec r;
    r.op = Op::ConcatRows;
    r.val = Mat(total, cols);
    int at = 0;
    for (const Node& p : parts) {
        r.parents.push_back(p.id());
        const Mat& v = p.value();
        for (int i = 0; i < v.rows; ++i)
            for (int j = 0; j < cols; ++j) r.val.at(at + i, j) = v.at(i, j);
        at += v.rows;
        r.needs_grad = r.needs_grad || needs(p.id());
    }
    return {this, push(std::move(r))};
}

Node Graph::concat_cols(const std::vector<Node>& parts) {
    check(!parts.empty(), "concat_cols: empty");
    int total = 0;
    const int rows = parts[0].rows();
    for (const Node& p : parts) {
        check(p.rows() == rows, "concat_cols: row mismatch");
        total += p.cols();
    }
    Rec r;
    r.op = Op::ConcatCols;
    r.val = Mat(rows, total);
    int at = 0;
    for (const Node& p : parts) {
        r.parents.push_back(p.id());
        const Mat& v = p.value();
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < v.cols; ++j) r.val.at(i, at + j) = v.at(i, j);
        at += v.cols;
        r.needs_grad = r.needs_grad || needs(p.id());
    }
    return {this, push(std::move(r))};
}

Node Graph::slice_rows(Node a, int r0, int r1) {
    check(0 <= r0 && r0 < r1 && r1 <= a.rows(), "slice_rows: bad range");
    Rec r;
    r.op = Op::SliceRows;
    r.a = a.id();
    r.i0 = r0;
    r.i1 = r1;
    r.val = Mat(r1 - r0, a.cols());
    const Mat& v = a.value();
    for (int i = r0; i < r1; ++i)
        for (int j = 0; j < v.cols; ++j) r.val.at(i - r0, j) = v.at(i, j);
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::slice_cols(Node a, int c0, int c1) {
    check(0 <= c0 && c0 < c1 && c1 <= a.cols(), "slice_cols: bad range");
    Rec r;
    r.op = Op::SliceCols;
    r.a = a.id();
    r.i0 = c0;
    r.i1 = c1;
    r.val = Mat(a.rows(), c1 - c0);
    const Mat& v = a.value();
    for (int i = 0; i < v.rows; ++i)
        for (int j = c0; j < c1; ++j) r.val.at(i, j - c0) = v.at(i, j);
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::gather_rows(Node a, std::vector<int> idx) {
    Rec r;
    r.op = Op::GatherRows;
    r.a = a.id();
    const Mat& v = a.value();
    r.val = Mat(static_cast<int>(idx.size()), v.cols);
    for (size_t i = 0; i < idx.size(); ++i) {
        check(0 <= idx[i] && idx[i] < v.rows, "gather_rows: index out of range");
        for (int j = 0; j < v.cols; ++j) r.val.at(static_cast<int>(i), j) = v.at(idx[i], j);
    }
    r.idx = std::move(idx);
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::layer_norm_rows(Node a, Node gamma, Node beta) {
    check(gamma.rows() == 1 && gamma.cols() == a.cols(), "layer_norm: gamma shape");
    check(beta.rows() == 1 && beta.cols() == a.cols(), "layer_norm: beta shape");
    Rec r;
    r.op = Op::LayerNormRows;
    r.a = a.id();
    r.b = gamma.id();
    r.c = beta.id();
    const Mat& v = a.value();
    const double* g = gamma.value().row(0);
    const double* bt = beta.value().row(0);
    r.val = Mat(v.rows, v.cols);
    const int n = v.cols;
    for (int i = 0; i < v.rows; ++i) {
        const double* x = v.row(i);
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += x[j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
        var /= n;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        double* y = r.val.row(i);
        for (int j = 0; j < n; ++j) y[j] = g[j] * ((x[j] - mean) * inv) + bt[j];
    }
    r.needs_grad = needs(r.a) || needs(r.b) || needs(r.c);
    return {this, push(std::move(r))};
}

Node Graph::biaffine_relu_logits(Node a, Node b, Node w) {
    check(a.cols() == b.cols(), "biaffine: feature dims differ");
    check(w.cols() == 1 && w.rows() == a.cols(), "biaffine: w must be Hx1");
    Rec r;
    r.op = Op::BiaffineReluLogits;
    r.a = a.id();
    r.b = b.id();
    r.c = w.id();
    const Mat& av = a.value();
    const Mat& bv = b.value();
    const double* wv = w.value().a.data();
    const int h = av.cols;
    r.val = Mat(av.rows, bv.rows);
    for (int i = 0; i < av.rows; ++i) {
        const double* ar = av.row(i);
        double* out = r.val.row(i);
        for (int j = 0; j < bv.rows; ++j) {
            const double* br = bv.row(j);
            double s = 0.0;
            for (int c = 0; c < h; ++c) {
                const double t = ar[c] + br[c];
                if (t > 0.0) s += t * wv[c];
            }
            out[j] = s;
        }
    }
    r.needs_grad = needs(r.a) || needs(r.b) || needs(r.c);
    return {this, push(std::move(r))};
}

Node Graph::pick(Node a, std::vector<std::pair<int, int>> entries) {
    Rec r;
    r.op = Op::Pick;
    r.a = a.id();
    const Mat& v = a.value();
    r.val = Mat(static_cast<int>(entries.size()), 1);
    for (size_t i = 0; i < entries.size(); ++i) {
        const auto [row, col] = entries[i];
        check(0 <= row && row < v.rows && 0 <= col && col < v.cols, "pick: index out of range");
        r.val.a[i] = v.at(row, col);
    }
    r.entries = std::move(entries);
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::clamped_log(Node a, double lo, double hi) {
    Rec r;
    r.op = Op::ClampedLog;
    r.a = a.id();
    r.s0 = lo;
    r.s1 = hi;
    r.val = a.value();
    for (double& x : r.val.a) {
        double c = x;
        if (c < lo) c = lo;
        if (c > hi) c = hi;
        x = std::log(c);
    }
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

Node Graph::sum_all(Node a) {
    Rec r;
    r.op = Op::SumAll;
    r.a = a.id();
    r.val = Mat(1, 1);
    double s = 0.0;
    for (double x : a.value().a) s += x;
    r.val.a[0] = s;
    r.needs_grad = needs(r.a);
    return {this, push(std::move(r))};
}

void Graph::backward(Node root) {
    check(root.valid() && root.rows() == 1 && root.cols() == 1, "backward: root must be 1x1");
    grad_of(root.id()).a[0] = 1.0;

    for (int id = root.id(); id >= 0; --id) {
        Rec& n = nodes_[id];
        if (!n.has_grad || !n.needs_grad) continue;
        const Mat& g = n.grad;
        switch (n.op) {
            case Op::Leaf: {
                n.par->ensure_grad();
                for (size_t i = 0; i < g.size(); ++i) n.par->grad.a[i] += g.a[i];
                break;
            }
            case Op::Constant:
                break;
            case Op::MatMul: {
                const Mat& av = nodes_[n.a].val;
                const Mat& bv = nodes_[n.b].val;
                if (needs(n.a)) matmul_acc_bt(g, bv, grad_of(n.a));
                if (needs(n.b)) matmul_acc_at(av, g, grad_of(n.b));
                break;
            }
            case Op::Add: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i];
                }
                if (needs(n.b)) {
                    Mat& db = grad_of(n.b);
                    for (size_t i = 0; i < g.size(); ++i) db.a[i] += g.a[i];
                }
                break;
            }
            case Op::AddRow: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i];
                }
                if (needs(n.b)) {
                    Mat& db = grad_of(n.b);
                    for (int i = 0; i < g.rows; ++i) {
                        const double* gr = g.row(i);
                        for (int j = 0; j < g.cols; ++j) db.a[j] += gr[j];
                    }
                }
                break;
            }
            case Op::Scale: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i) da.a[i] += n.s0 * g.a[i];
                }
                break;
            }
            case Op::Hadamard: {
                const Mat& av = nodes_[n.a].val;
                const Mat& bv = nodes_[n.b].val;
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i] * bv.a[i];
                }
                if (needs(n.b)) {
                    Mat& db = grad_of(n.b);
                    for (size_t i = 0; i < g.size(); ++i) db.a[i] += g.a[i] * av.a[i];
                }
                break;
            }
            case Op::Relu: {
                if (needs(n.a)) {
                    const Mat& av = nodes_[n.a].val;
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i)
                        if (av.a[i] > 0.0) da.a[i] += g.a[i];
                }
                break;
            }
            case Op::Tanh: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i)
                        da.a[i] += g.a[i] * (1.0 - n.val.a[i] * n.val.a[i]);
                }
                break;
            }
            case Op::Sigmoid: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i)
                        da.a[i] += g.a[i] * n.val.a[i] * (1.0 - n.val.a[i]);
                }
                break;
            }
            case Op::SoftmaxRows: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (int i = 0; i < g.rows; ++i) {
                        const double* y = n.val.row(i);
                        const double* gr = g.row(i);
                        double dot = 0.0;
                        for (int j = 0; j < g.cols; ++j) dot += y[j] * gr[j];
                        double* dar = da.row(i);
                        for (int j = 0; j < g.cols; ++j) dar[j] += y[j] * (gr[j] - dot);
                    }
                }
                break;
            }
            case Op::Transpose: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (int i = 0; i < g.rows; ++i)
                        for (int j = 0; j < g.cols; ++j) da.at(j, i) += g.at(i, j);
                }
                break;
            }
            case Op::ConcatRows: {
                int at = 0;
                for (int pid : n.parents) {
                    const Mat& pv = nodes_[pid].val;
                    if (needs(pid)) {
                        Mat& dp = grad_of(pid);
                        for (int i = 0; i < pv.rows; ++i)
                            for (int j = 0; j < pv.cols; ++j) dp.at(i, j) += g.at(at + i, j);
                    }
                    at += pv.rows;
                }
                break;
            }
            case Op::ConcatCols: {
                int at = 0;
                for (int pid : n.parents) {
                    const Mat& pv = nodes_[pid].val;
                    if (needs(pid)) {
                        Mat& dp = grad_of(pid);
                        for (int i = 0; i < pv.rows; ++i)
                            for (int j = 0; j < pv.cols; ++j) dp.at(i, j) += g.at(i, at + j);
                    }
                    at += pv.cols;
                }
                break;
            }
            case Op::SliceRows: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (int i = 0; i < g.rows; ++i)
                        for (int j = 0; j < g.cols; ++j) da.at(n.i0 + i, j) += g.at(i, j);
                }
                break;
            }
            case Op::SliceCols: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (int i = 0; i < g.rows; ++i)
                        for (int j = 0; j < g.cols; ++j) da.at(i, n.i0 + j) += g.at(i, j);
                }
                break;
            }
            case Op::GatherRows: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < n.idx.size(); ++i)
                        for (int j = 0; j < g.cols; ++j)
                            da.at(n.idx[i], j) += g.at(static_cast<int>(i), j);
                }
                break;
            }
            case Op::LayerNormRows: {
                const Mat& x = nodes_[n.a].val;
                const double* gam = nodes_[n.b].val.row(0);
                const int cols = x.cols;
                for (int i = 0; i < x.rows; ++i) {
                    const double* xr = x.row(i);
                    const double* gr = g.row(i);
                    double mean = 0.0;
                    for (int j = 0; j < cols; ++j) mean += xr[j];
                    mean /= cols;
                    double var = 0.0;
                    for (int j = 0; j < cols; ++j) var += (xr[j] - mean) * (xr[j] - mean);
                    var /= cols;
                    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
                    if (needs(n.b) || needs(n.c)) {
                        Mat* dg = needs(n.b) ? &grad_of(n.b) : nullptr;
                        Mat* db = needs(n.c) ? &grad_of(n.c) : nullptr;
                        for (int j = 0; j < cols; ++j) {
                            const double xhat = (xr[j] - mean) * inv;
                            if (dg) dg->a[j] += gr[j] * xhat;
                            if (db) db->a[j] += gr[j];
                        }
                    }
                    if (needs(n.a)) {
                        // dx = inv * (dxh - mean(dxh) - xhat * mean(dxh*xhat))
                        double m1 = 0.0, m2 = 0.0;
                        for (int j = 0; j < cols; ++j) {
                            const double xhat = (xr[j] - mean) * inv;
                            const double dxh = gr[j] * gam[j];
                            m1 += dxh;
                            m2 += dxh * xhat;
                        }
                        m1 /= cols;
                        m2 /= cols;
                        Mat& da = grad_of(n.a);
                        double* dar = da.row(i);
                        for (int j = 0; j < cols; ++j) {
                            const double xhat = (xr[j] - mean) * inv;
                            const double dxh = gr[j] * gam[j];
                            dar[j] += inv * (dxh - m1 - xhat * m2);
                        }
                    }
                }
                break;
            }
            case Op::BiaffineReluLogits: {
                const Mat& av = nodes_[n.a].val;
                const Mat& bv = nodes_[n.b].val;
                const double* wv = nodes_[n.c].val.a.data();
                const int h = av.cols;
                Mat* da = needs(n.a) ? &grad_of(n.a) : nullptr;
                Mat* db = needs(n.b) ? &grad_of(n.b) : nullptr;
                Mat* dw = needs(n.c) ? &grad_of(n.c) : nullptr;
                for (int i = 0; i < av.rows; ++i) {
                    const double* ar = av.row(i);
                    const double* gr = g.row(i);
                    for (int j = 0; j < bv.rows; ++j) {
                        const double gij = gr[j];
                        if (gij == 0.0) continue;
                        const double* br = bv.row(j);
                        for (int c = 0; c < h; ++c) {
                            const double t = ar[c] + br[c];
                            if (t <= 0.0) continue;
                            const double gw = gij * wv[c];
                            if (da) da->at(i, c) += gw;
                            if (db) db->at(j, c) += gw;
                            if (dw) dw->a[c] += gij * t;
                        }
                    }
                }
                break;
            }
            case Op::Pick: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < n.entries.size(); ++i)
                        da.at(n.entries[i].first, n.entries[i].second) += g.a[i];
                }
                break;
            }
            case Op::ClampedLog: {
                if (needs(n.a)) {
                    const Mat& av = nodes_[n.a].val;
                    Mat& da = grad_of(n.a);
                    for (size_t i = 0; i < g.size(); ++i) {
                        const double x = av.a[i];
                        if (x > n.s0 && x < n.s1) da.a[i] += g.a[i] / x;
                    }
                }
                break;
            }
            case Op::SumAll: {
                if (needs(n.a)) {
                    Mat& da = grad_of(n.a);
                    const double gv = g.a[0];
                    for (double& x : da.a) x += gv;
                }
                break;
            }
        }
    }
}

} // namespace gmner::ad
