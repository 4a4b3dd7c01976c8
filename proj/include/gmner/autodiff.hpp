#pragma once

#include "gmner/mat.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gmner::ad {

/// Trainable tensor plus its accumulated gradient. Parameters live outside
/// any Graph; forward passes reference them and backward() accumulates into
/// `grad` until the optimizer consumes it.
struct Param {
    std::string name;
    int group = 0;
    Mat value;
    Mat grad;
    bool frozen = false;

    void ensure_grad() {
        if (!grad.same_shape(value)) grad = Mat(value.rows, value.cols);
    }
    void zero_grad() {
        ensure_grad();
        grad.zero();
    }
};

class Graph;

/// Lightweight handle to a node on a Graph tape.
class Node {
public:
    Node() = default;
    Node(Graph* g, int id) : g_(g), id_(id) {}
    bool valid() const { return g_ != nullptr; }
    int id() const { return id_; }
    const Mat& value() const;
    int rows() const;
    int cols() const;

private:
    friend class Graph;
    Graph* g_ = nullptr;
    int id_ = -1;
};

/// Eager tape: every builder computes its value immediately and records
/// enough to run reverse-mode accumulation. One Graph per forward pass;
/// clear() recycles storage between examples.
class Graph {
public:
    void clear();
    size_t size() const { return nodes_.size(); }

    Node param(Param& p);
    Node constant(Mat m);

    Node matmul(Node a, Node b);
    Node add(Node a, Node b);
    /// Broadcast a 1xC row vector over every row of a.
    Node add_row(Node a, Node row);
    Node scale(Node a, double s);
    Node hadamard(Node a, Node b);
    Node relu(Node a);
    Node tanh_act(Node a);
    Node sigmoid(Node a);
    Node softmax_rows(Node a);
    Node transpose(Node a);
    Node concat_rows(const std::vector<Node>& parts);
    Node concat_cols(const std::vector<Node>& parts);
    Node slice_rows(Node a, int r0, int r1);
    Node slice_cols(Node a, int c0, int c1);
    /// out.row(i) = a.row(idx[i]); duplicate indices accumulate gradient.
    Node gather_rows(Node a, std::vector<int> idx);
    Node layer_norm_rows(Node a, Node gamma, Node beta);
    /// out[i,j] = sum_c relu(a[i,c] + b[j,c]) * w[c,0]; the fused joint
    /// representation used by the boundary and region heads.
    Node biaffine_relu_logits(Node a, Node b, Node w);
    /// Column vector of selected entries a[r_i, c_i].
    Node pick(Node a, std::vector<std::pair<int, int>> entries);
    /// log(clamp(a, lo, hi)); gradient is zero where the clamp saturates.
    Node clamped_log(Node a, double lo, double hi);
    Node sum_all(Node a);

    /// Reverse pass from a 1x1 root; accumulates into every reachable
    /// Param::grad (frozen parameters included; the optimizer skips them).
    void backward(Node root);

    const Mat& value_of(int id) const { return nodes_[id].val; }

private:
    enum class Op {
        Leaf,
        Constant,
        MatMul,
        Add,
        AddRow,
        Scale,
        Hadamard,
        Relu,
        Tanh,
        Sigmoid,
        SoftmaxRows,
        Transpose,
        ConcatRows,
        ConcatCols,
        SliceRows,
        SliceCols,
        GatherRows,
        LayerNormRows,
        BiaffineReluLogits,
        Pick,
        ClampedLog,
        SumAll,
    };

    struct Rec {
        Op op;
        int a = -1, b = -1, c = -1;
        std::vector<int> parents;
        Mat val;
        Mat grad;
        bool has_grad = false;
        bool needs_grad = false;
        Param* par = nullptr;
        double s0 = 0.0, s1 = 0.0;
        int i0 = 0, i1 = 0;
        std::vector<int> idx;
        std::vector<std::pair<int, int>> entries;
    };

    int push(Rec rec);
    Mat& grad_of(int id);
    bool needs(int id) const { return id >= 0 && nodes_[id].needs_grad; }

    std::vector<Rec> nodes_;
};

inline const Mat& Node::value() const { return g_->value_of(id_); }
inline int Node::rows() const { return value().rows; }
inline int Node::cols() const { return value().cols; }

} // namespace gmner::ad
