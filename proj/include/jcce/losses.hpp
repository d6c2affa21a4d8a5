#pragma once

#include <span>
#include <vector>

#include "jcce/nn.hpp"

namespace jcce {

/// X_i for every batch row: indices of rows sharing row i's content, i included.
using PositiveGroups = std::vector<std::vector<std::size_t>>;

/// Loss value and gradients for an anchor/positive batch (both N x E).
struct LossResult {
    double value = 0.0;
    Matrix grad_anchors;
    Matrix grad_positives;
};

/// Loss value and gradients for a context/content batch (both N x E).
struct TwoTowerLoss {
    double value = 0.0;
    Matrix grad_context;
    Matrix grad_item;
};

/// Throws std::invalid_argument unless the groups are equivalence classes
/// over 0..n-1 (reflexive, symmetric, transitive).
void validate_groups(const PositiveGroups& groups, std::size_t n);

/// Mean softmax cross-entropy of each anchor against all positives, with its
/// own positive as the target. Dot-product similarities, max-shifted.
LossResult npairs_loss(const Matrix& anchors, const Matrix& positives);

/// As npairs_loss, but anchor i targets every positive in X_i and its term is
/// scaled by 1/|X_i|. Equals npairs_loss when every group is a singleton.
LossResult relaxed_npairs_loss(const Matrix& anchors, const Matrix& positives, const PositiveGroups& groups);

/// lambda * sum_i (|a_i|^2 + |p_i|^2).
LossResult l2_reg(const Matrix& anchors, const Matrix& positives, double lambda);

/// N-pairs in both directions (content as anchor, then context as anchor)
/// plus one L2 term.
TwoTowerLoss jcce_objective(const Matrix& context_emb, const Matrix& item_emb, double lambda);

/// Relaxed N-pairs in both directions plus one L2 term. The same groups apply
/// in both directions since they are defined by content identity.
TwoTowerLoss rjcce_objective(const Matrix& context_emb, const Matrix& item_emb, const PositiveGroups& groups,
                             double lambda);

/// sum_i softplus(-(S(i,i) - S(i,j_i))) + L2, with S(x, y) = c_x . t_y and
/// j_i = negative_index[i] a row of the batch. Throws if j_i == i.
TwoTowerLoss bpr_loss(const Matrix& context_emb, const Matrix& item_emb,
                      std::span<const std::size_t> negative_index, double lambda);

/// log(1 + e^x) without overflow.
double softplus(double x);

}  // namespace jcce
