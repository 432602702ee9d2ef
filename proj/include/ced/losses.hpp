#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ced/label.hpp"
#include "ced/matrix.hpp"

namespace ced {

/// Per-negative weight w = exp(-||h_anchor - h_neg||_2); symmetric, in (0, 1],
/// equal to 1 exactly when the vectors coincide.
double pair_weight(const std::vector<double>& h_anchor, const std::vector<double>& h_neg);

struct ContrastiveAnchor {
    std::vector<double> h;  // final multimodal representation (pre-projection)
    std::vector<double> z;  // projection-head output, similarity space
    Label label = Label::kNeutral;
    std::int64_t sample_id = 0;
};

struct ContrastiveBatchView {
    std::vector<ContrastiveAnchor> anchors;
    double temperature = 0.07;
    // Literal form: the denominator ranges over negatives only. The flag adds
    // the positive term back, giving the conventional InfoNCE-style variant.
    bool denominator_includes_positive = false;
    // Test hook: forces every pair weight to 1 (the unweighted variant).
    bool unit_weights = false;
};

struct ContrastiveValue {
    double l_c = 0.0;
    int skipped = 0;  // anchors with empty positive or negative set
};

/// Adaptive weighted contrastive loss. Anchors whose positive or negative set
/// is empty contribute zero and are counted in `skipped`; the value is the
/// mean over the remaining anchors and is deliberately not clamped (it can be
/// negative under the literal denominator).
ContrastiveValue adaptive_contrastive_loss(const ContrastiveBatchView& batch);

/// -(1/B) sum_i log(prob_i[label_i]); probabilities at the true label equal to
/// zero are clamped to 1e-300 and counted in `clamped` when provided.
double cross_entropy(const std::vector<std::array<double, 3>>& probs,
                     const std::vector<Label>& labels, int* clamped = nullptr);

/// l_s + lambda * l_c.
double total_loss(double l_s, double l_c, double lambda);

struct LossBreakdown {
    double l_s = 0.0;
    double l_c = 0.0;
    double l_total = 0.0;
    double lambda = 0.0;
    int skipped_anchors = 0;

    static LossBreakdown make(double l_s, double l_c, double lambda, int skipped) {
        return {l_s, l_c, l_s + lambda * l_c, lambda, skipped};
    }
};

namespace detail {

struct ContrastiveGrads {
    Matrix dh;
    Matrix dz;
};

// Shared forward/backward core used by both the plain API above and the tape
// op, so the two routes cannot drift apart. h: B x d, z: B x d_psi, labels in
// {0,1,2}. Gradients (unit upstream) are written when `grads` is non-null.
double contrastive_core(const Matrix& h, const Matrix& z, const std::vector<int>& labels,
                        double tau, bool adaptive_weights, bool include_positive_in_denominator,
                        int* skipped, ContrastiveGrads* grads);

double cross_entropy_core(const Matrix& probs, const std::vector<int>& labels, int* clamped,
                          Matrix* dprobs);

}  // namespace detail

}  // namespace ced
