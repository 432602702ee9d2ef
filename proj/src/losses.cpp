#include "ced/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace ced {

namespace {
constexpr double kProbFloor = 1e-300;
constexpr double kDistanceFloor = 1e-12;  // backward-only guard at zero distance
}  // namespace

double pair_weight(const std::vector<double>& h_anchor, const std::vector<double>& h_neg) {
    require_shape(h_anchor.size() == h_neg.size(), "pair_weight vector length mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < h_anchor.size(); ++i) {
        const double d = h_anchor[i] - h_neg[i];
        sq += d * d;
    }
    return std::exp(-std::sqrt(sq));
}

namespace detail {

double contrastive_core(const Matrix& h, const Matrix& z, const std::vector<int>& labels,
                        double tau, bool adaptive_weights, bool include_positive_in_denominator,
                        int* skipped, ContrastiveGrads* grads) {
    require_shape(tau > 0.0, "contrastive temperature must be positive");
    const int n = h.rows();
    require_shape(z.rows() == n && static_cast<int>(labels.size()) == n,
                  "contrastive batch row mismatch");
    const int d = h.cols();
    const int d_psi = z.cols();

    if (grads != nullptr) {
        grads->dh = Matrix(n, d);
        grads->dz = Matrix(n, d_psi);
    }

    // Pairwise similarities s_ij = z_i . z_j / tau, distances r_ij and weights.
    std::vector<double> sim(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> dist(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> weight(static_cast<std::size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double dot = 0.0;
            const double* zi = z.row_ptr(i);
            const double* zj = z.row_ptr(j);
            for (int k = 0; k < d_psi; ++k) dot += zi[k] * zj[k];
            sim[i * n + j] = dot / tau;
            if (adaptive_weights && labels[i] != labels[j]) {
                double sq = 0.0;
                const double* hi = h.row_ptr(i);
                const double* hj = h.row_ptr(j);
                for (int k = 0; k < d; ++k) {
                    const double diff = hi[k] - hj[k];
                    sq += diff * diff;
                }
                dist[i * n + j] = std::sqrt(sq);
                weight[i * n + j] = std::exp(-dist[i * n + j]);
            }
        }
    }

    // First pass: count valid anchors so per-anchor averaging uses the final
    // denominator during gradient accumulation.
    int valid = 0;
    for (int i = 0; i < n; ++i) {
        bool has_p = false;
        bool has_n = false;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            (labels[j] == labels[i] ? has_p : has_n) = true;
        }
        if (has_p && has_n) ++valid;
    }
    if (skipped != nullptr) *skipped = n - valid;
    if (valid == 0) return 0.0;

    const double anchor_scale = 1.0 / valid;
    double total = 0.0;

    auto add_dz = [&](int row, int other, double coeff) {
        // d(s_row_other)/dz_row = z_other / tau and symmetric counterpart.
        if (grads == nullptr) return;
        double* g_row = grads->dz.row_ptr(row);
        double* g_other = grads->dz.row_ptr(other);
        const double* z_row = z.row_ptr(row);
        const double* z_other = z.row_ptr(other);
        const double c = coeff / tau;
        for (int k = 0; k < d_psi; ++k) {
            g_row[k] += c * z_other[k];
            g_other[k] += c * z_row[k];
        }
    };
    auto add_dw = [&](int i, int j, double coeff) {
        // dw_ij/dh_i = -w * (h_i - h_j)/r; opposite sign for h_j.
        if (grads == nullptr || !adaptive_weights) return;
        const double w = weight[i * n + j];
        const double r = std::max(dist[i * n + j], kDistanceFloor);
        const double c = -coeff * w / r;
        double* gi = grads->dh.row_ptr(i);
        double* gj = grads->dh.row_ptr(j);
        const double* hi = h.row_ptr(i);
        const double* hj = h.row_ptr(j);
        for (int k = 0; k < d; ++k) {
            const double diff = hi[k] - hj[k];
            gi[k] += c * diff;
            gj[k] -= c * diff;
        }
    };

    for (int i = 0; i < n; ++i) {
        std::vector<int> positives;
        std::vector<int> negatives;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            (labels[j] == labels[i] ? positives : negatives).push_back(j);
        }
        if (positives.empty() || negatives.empty()) continue;

        double den_neg = 0.0;
        for (int neg : negatives) den_neg += weight[i * n + neg] * std::exp(sim[i * n + neg]);

        const double p_scale = anchor_scale / static_cast<double>(positives.size());
        double anchor_sum = 0.0;
        double dlog_den_neg = 0.0;  // accumulated coefficient on log of the negative sum
        for (int pos : positives) {
            const double s_p = sim[i * n + pos];
            if (include_positive_in_denominator) {
                const double e_p = std::exp(s_p);
                const double den = den_neg + e_p;
                anchor_sum += -(s_p - std::log(den));
                add_dz(i, pos, p_scale * (-1.0 + e_p / den));
                // negative-sum part of this per-positive denominator
                const double c = p_scale / den;
                for (int neg : negatives) {
                    const double e_n = std::exp(sim[i * n + neg]);
                    add_dz(i, neg, c * weight[i * n + neg] * e_n);
                    add_dw(i, neg, c * e_n);
                }
            } else {
                anchor_sum += -(s_p - std::log(den_neg));
                add_dz(i, pos, -p_scale);
                dlog_den_neg += p_scale;
            }
        }
        if (!include_positive_in_denominator && dlog_den_neg != 0.0) {
            const double c = dlog_den_neg / den_neg;
            for (int neg : negatives) {
                const double e_n = std::exp(sim[i * n + neg]);
                add_dz(i, neg, c * weight[i * n + neg] * e_n);
                add_dw(i, neg, c * e_n);
            }
        }
        total += anchor_sum / static_cast<double>(positives.size());
    }
    return total * anchor_scale;
}

double cross_entropy_core(const Matrix& probs, const std::vector<int>& labels, int* clamped,
                          Matrix* dprobs) {
    const int n = probs.rows();
    require_shape(n >= 1, "cross_entropy on empty batch");
    require_shape(static_cast<int>(labels.size()) == n, "cross_entropy label count mismatch");
    if (dprobs != nullptr) *dprobs = Matrix(n, probs.cols());
    int clamp_count = 0;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const int y = labels[i];
        require_shape(y >= 0 && y < probs.cols(), "cross_entropy label out of range");
        double p = probs(i, y);
        if (p < kProbFloor) {
            p = kProbFloor;
            ++clamp_count;
            // gradient vanishes at the floor
        } else if (dprobs != nullptr) {
            (*dprobs)(i, y) = -1.0 / (static_cast<double>(n) * p);
        }
        sum += -std::log(p);
    }
    if (clamped != nullptr) *clamped = clamp_count;
    return sum / static_cast<double>(n);
}

}  // namespace detail

ContrastiveValue adaptive_contrastive_loss(const ContrastiveBatchView& batch) {
    const int n = static_cast<int>(batch.anchors.size());
    require_shape(n >= 2, "contrastive batch needs at least 2 anchors");
    const int d = static_cast<int>(batch.anchors[0].h.size());
    const int d_psi = static_cast<int>(batch.anchors[0].z.size());
    Matrix h(n, d);
    Matrix z(n, d_psi);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const ContrastiveAnchor& a = batch.anchors[i];
        require_shape(static_cast<int>(a.h.size()) == d, "anchor h length mismatch");
        require_shape(static_cast<int>(a.z.size()) == d_psi, "anchor z length mismatch");
        for (int k = 0; k < d; ++k) h(i, k) = a.h[k];
        for (int k = 0; k < d_psi; ++k) z(i, k) = a.z[k];
        labels[i] = index_of(a.label);
    }
    ContrastiveValue out;
    out.l_c = detail::contrastive_core(h, z, labels, batch.temperature, !batch.unit_weights,
                                       batch.denominator_includes_positive, &out.skipped, nullptr);
    return out;
}

double cross_entropy(const std::vector<std::array<double, 3>>& probs,
                     const std::vector<Label>& labels, int* clamped) {
    const int n = static_cast<int>(probs.size());
    require_shape(n >= 1, "cross_entropy on empty batch");
    Matrix p(n, 3);
    std::vector<int> ints(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) p(i, k) = probs[i][k];
        ints[i] = index_of(labels[i]);
    }
    return detail::cross_entropy_core(p, ints, clamped, nullptr);
}

double total_loss(double l_s, double l_c, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("total_loss lambda must be >= 0");
    return l_s + lambda * l_c;
}

}  // namespace ced
