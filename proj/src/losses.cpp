#include "jcce/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jcce/errors.hpp"

namespace jcce {
namespace {

void check_pair(const Matrix& a, const Matrix& p, const char* what) {
    if (a.rows() != p.rows() || a.cols() != p.cols()) {
        throw ShapeError(std::string(what) + ": anchor and positive batches differ in shape");
    }
    if (a.rows() < 1) throw ShapeError(std::string(what) + ": empty batch");
    if (!a.allFinite() || !p.allFinite()) throw NumericError(std::string(what) + ": non-finite embeddings");
}

/// log-sum-exp of row[idx] over the listed indices, in the listed order.
template <typename Row, typename Indices>
double log_sum_exp(const Row& row, const Indices& idx) {
    double m = -std::numeric_limits<double>::infinity();
    for (auto k : idx) m = std::max(m, row[static_cast<Eigen::Index>(k)]);
    double s = 0.0;
    for (auto k : idx) s += std::exp(row[static_cast<Eigen::Index>(k)] - m);
    return m + std::log(s);
}

/// Shared core of both softmax losses. `groups` empty means each row is its
/// own single positive.
LossResult softmax_pairs(const Matrix& a, const Matrix& p, const PositiveGroups* groups) {
    const Eigen::Index n = a.rows();
    const Matrix sim = a * p.transpose();
    Matrix grad_sim = Matrix::Zero(n, n);
    std::vector<std::size_t> all(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto row = sim.row(i);
        const double lse_all = log_sum_exp(row, all);
        double lse_pos;
        double weight = 1.0;
        if (groups) {
            const auto& xi = (*groups)[static_cast<std::size_t>(i)];
            lse_pos = log_sum_exp(row, xi);
            weight = 1.0 / static_cast<double>(xi.size());
            const double scale = weight / static_cast<double>(n);
            for (Eigen::Index k = 0; k < n; ++k) grad_sim(i, k) = std::exp(row[k] - lse_all);
            for (auto k : xi) {
                const auto kk = static_cast<Eigen::Index>(k);
                grad_sim(i, kk) -= std::exp(row[kk] - lse_pos);
            }
            grad_sim.row(i) *= scale;
        } else {
            lse_pos = row[i];
            const double scale = 1.0 / static_cast<double>(n);
            for (Eigen::Index k = 0; k < n; ++k) grad_sim(i, k) = std::exp(row[k] - lse_all);
            grad_sim(i, i) -= 1.0;
            grad_sim.row(i) *= scale;
        }
        total += weight * (lse_all - lse_pos);
    }
    LossResult out;
    out.value = total / static_cast<double>(n);
    out.grad_anchors = grad_sim * p;
    out.grad_positives = grad_sim.transpose() * a;
    return out;
}

PositiveGroups sorted_groups(const PositiveGroups& groups) {
    PositiveGroups out = groups;
    for (auto& g : out) std::sort(g.begin(), g.end());
    return out;
}

}  // namespace

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

void validate_groups(const PositiveGroups& groups, std::size_t n) {
    if (groups.size() != n) throw std::invalid_argument("groups: expected one index set per batch row");
    const auto sorted = sorted_groups(groups);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = sorted[i];
        if (std::adjacent_find(g.begin(), g.end()) != g.end()) {
            throw std::invalid_argument("groups: duplicate index in X_" + std::to_string(i));
        }
        if (!std::binary_search(g.begin(), g.end(), i)) {
            throw std::invalid_argument("groups: X_" + std::to_string(i) + " does not contain its own row");
        }
        for (std::size_t j : g) {
            if (j >= n) throw std::invalid_argument("groups: index out of range");
            if (sorted[j] != g) throw std::invalid_argument("groups: not an equivalence partition");
        }
    }
}

LossResult npairs_loss(const Matrix& anchors, const Matrix& positives) {
    check_pair(anchors, positives, "npairs_loss");
    return softmax_pairs(anchors, positives, nullptr);
}

LossResult relaxed_npairs_loss(const Matrix& anchors, const Matrix& positives, const PositiveGroups& groups) {
    check_pair(anchors, positives, "relaxed_npairs_loss");
    validate_groups(groups, static_cast<std::size_t>(anchors.rows()));
    const auto sorted = sorted_groups(groups);
    return softmax_pairs(anchors, positives, &sorted);
}

LossResult l2_reg(const Matrix& anchors, const Matrix& positives, double lambda) {
    check_pair(anchors, positives, "l2_reg");
    if (!(lambda >= 0.0)) throw std::invalid_argument("l2_reg: lambda must be non-negative");
    LossResult out;
    out.value = lambda * (anchors.squaredNorm() + positives.squaredNorm());
    out.grad_anchors = (2.0 * lambda) * anchors;
    out.grad_positives = (2.0 * lambda) * positives;
    return out;
}

TwoTowerLoss jcce_objective(const Matrix& context_emb, const Matrix& item_emb, double lambda) {
    const auto item_as_anchor = npairs_loss(item_emb, context_emb);
    const auto context_as_anchor = npairs_loss(context_emb, item_emb);
    const auto reg = l2_reg(context_emb, item_emb, lambda);
    TwoTowerLoss out;
    out.value = item_as_anchor.value + context_as_anchor.value + reg.value;
    out.grad_context = item_as_anchor.grad_positives + context_as_anchor.grad_anchors + reg.grad_anchors;
    out.grad_item = item_as_anchor.grad_anchors + context_as_anchor.grad_positives + reg.grad_positives;
    return out;
}

TwoTowerLoss rjcce_objective(const Matrix& context_emb, const Matrix& item_emb, const PositiveGroups& groups,
                             double lambda) {
    const auto item_as_anchor = relaxed_npairs_loss(item_emb, context_emb, groups);
    const auto context_as_anchor = relaxed_npairs_loss(context_emb, item_emb, groups);
    const auto reg = l2_reg(context_emb, item_emb, lambda);
    TwoTowerLoss out;
    out.value = item_as_anchor.value + context_as_anchor.value + reg.value;
    out.grad_context = item_as_anchor.grad_positives + context_as_anchor.grad_anchors + reg.grad_anchors;
    out.grad_item = item_as_anchor.grad_anchors + context_as_anchor.grad_positives + reg.grad_positives;
    return out;
}

TwoTowerLoss bpr_loss(const Matrix& context_emb, const Matrix& item_emb,
                      std::span<const std::size_t> negative_index, double lambda) {
    check_pair(context_emb, item_emb, "bpr_loss");
    const auto n = static_cast<std::size_t>(context_emb.rows());
    if (negative_index.size() != n) throw ShapeError("bpr_loss: need one negative per row");
    const auto reg = l2_reg(context_emb, item_emb, lambda);
    TwoTowerLoss out;
    out.value = reg.value;
    out.grad_context = reg.grad_anchors;
    out.grad_item = reg.grad_positives;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = negative_index[i];
        if (j >= n) throw std::invalid_argument("bpr_loss: negative index out of range");
        if (j == i) throw std::invalid_argument("bpr_loss: negative equals the row's own positive");
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        const double z = context_emb.row(ii).dot(item_emb.row(ii)) - context_emb.row(ii).dot(item_emb.row(jj));
        out.value += softplus(-z);
        // d softplus(-z) / dz = -sigmoid(-z)
        const double g = -1.0 / (1.0 + std::exp(z));
        out.grad_context.row(ii) += g * (item_emb.row(ii) - item_emb.row(jj));
        out.grad_item.row(ii) += g * context_emb.row(ii);
        out.grad_item.row(jj) -= g * context_emb.row(ii);
    }
    return out;
}

}  // namespace jcce
