#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ced/matrix.hpp"

namespace ced {

struct Var {
    int id = -1;
    bool valid() const noexcept { return id >= 0; }
};

// Reverse-mode tape over Matrix values. Nodes are appended in SSA order, so a
// single reverse pass over the node list is a valid backward traversal.
// Gradients are only materialized for nodes reachable from a differentiable
// leaf, which keeps constants (frozen patch features, token embeddings inputs)
// out of the backward pass entirely.
class Tape {
public:
    enum class Op : std::uint8_t {
        kLeaf,
        kAdd,
        kSub,
        kScale,
        kHadamard,
        kMatmul,
        kMatmulNT,
        kAddRowBroadcast,
        kSoftmaxRows,
        kLayerNorm,
        kGelu,
        kConcatCols,
        kRow,
        kGatherRows,
        kStackRows,
        kSumAll,
        kL2NormalizeRows,
        kCrossEntropyMean,
        kAdaptiveContrastive,
    };

    Var leaf(Matrix value, bool requires_grad);
    Var constant(Matrix value) { return leaf(std::move(value), false); }

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double alpha);
    Var hadamard(Var a, Var b);
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);
    Var add_row_broadcast(Var a, Var bias);
    Var softmax_rows(Var a);
    Var layer_norm(Var x, Var gamma, Var beta, double eps);
    Var gelu(Var a);
    Var concat_cols(const std::vector<Var>& parts);
    Var row(Var a, int index);
    Var gather_rows(Var table, const std::vector<int>& ids);
    Var stack_rows(const std::vector<Var>& rows);
    Var sum_all(Var a);
    Var l2_normalize_rows(Var a);

    /// -(1/B) sum_i log(max(probs(i, label_i), 1e-300)). `clamped` (optional)
    /// receives how many entries hit the floor.
    Var cross_entropy_mean(Var probs, const std::vector<int>& labels, int* clamped = nullptr);

    struct ContrastiveResult {
        Var value;
        int skipped = 0;
    };
    /// Adaptive weighted contrastive loss over stacked final representations
    /// h_stack (B x d) and projections z_stack (B x d_psi).
    ContrastiveResult adaptive_contrastive(Var h_stack, Var z_stack,
                                           const std::vector<int>& labels, double tau,
                                           bool adaptive_weights,
                                           bool include_positive_in_denominator);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    /// Valid after backward(); zero matrix if the node never received gradient.
    Matrix grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

    void backward(Var root);

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Drops all nodes at index >= n. Used to reuse leaf bindings across samples.
    void truncate(std::size_t n);

private:
    struct Node {
        Op op = Op::kLeaf;
        int a = -1, b = -1, c = -1;
        std::vector<int> list;  // variadic inputs, gather ids, or class labels
        double alpha = 0.0;     // scale factor / eps / tau
        int iparam = 0;         // op-specific flags
        Matrix value;
        Matrix grad;
        Matrix aux;  // cached forward stats needed by backward
        bool requires_grad = false;
        bool has_grad = false;
    };

    int push(Node node);
    Node& at(Var v) { return nodes_[v.id]; }
    const Node& at(Var v) const { return nodes_[v.id]; }
    void accumulate(int id, const Matrix& g);
    Matrix& grad_buffer(int id);
    void backward_node(int id);

    std::vector<Node> nodes_;
};

struct GradCheckReport {
    std::string param_name;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    int probe_count = 0;
    int nonfinite_evals = 0;
};

struct GradCheckTarget {
    std::string name;
    Matrix* tensor;
};

/// Central finite differences against analytic gradients.
///
/// `loss_and_grads` evaluates the loss at the targets' current values; when the
/// output vector pointer is non-null it must also append one gradient matrix
/// per target, in target order. Probed coordinates are chosen per tensor from
/// `seed`. Relative error is only charged where the larger of the two
/// gradients exceeds 1e-6; below that the absolute error is the meaningful
/// figure and is tracked separately.
std::vector<GradCheckReport> grad_check(
    const std::function<double(std::vector<Matrix>*)>& loss_and_grads,
    const std::vector<GradCheckTarget>& targets, double eps, int probes_per_tensor,
    std::uint64_t seed);

}  // namespace ced
