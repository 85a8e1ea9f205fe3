#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace amf::protoclust {

// Correlation distance d_ij = 1 - |corr(r_i, r_j)|, clamped to [0, 1].
struct DistanceMatrix {
  int n = 0;
  Eigen::MatrixXd d;
};

// Series are matrix columns; each needs length >= 3 and nonzero variance.
DistanceMatrix corr_distance_matrix(const Eigen::MatrixXd& series);

// radius = min over x in C of max over x' in C of d(x, x'); the minimizing
// point is the prototype (ties to the lowest index).
std::pair<double, int> minimax_radius(const DistanceMatrix& dist,
                                      const std::vector<int>& member_indices);

struct Merge {
  int left = 0;   // node ids: leaves 0..n-1, merges n..2n-2
  int right = 0;
  double height = 0.0;
  int prototype = 0;  // leaf index
};

struct ClusterTree {
  int n_leaves = 0;
  std::vector<Merge> merges;
};

// Agglomerative clustering with minimax linkage d(G,H) = r(G u H). Merge
// ties break on the lexicographically smallest (sorted) pair of the two
// clusters' prototypes. Heights never invert.
ClusterTree minimax_cluster(const DistanceMatrix& dist);

// Prototypes of the clusters formed by applying merges with height <=
// threshold; ascending leaf indices.
std::vector<int> cut_prototypes(const ClusterTree& tree, const DistanceMatrix& dist,
                                double height_threshold);

}  // namespace amf::protoclust
