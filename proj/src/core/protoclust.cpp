#include "core/protoclust.hpp"

#include <algorithm>
#include <cmath>

#include "core/common.hpp"

namespace amf::protoclust {

DistanceMatrix corr_distance_matrix(const Eigen::MatrixXd& series) {
  const Eigen::Index n = series.cols();
  const Eigen::Index t = series.rows();
  if (n < 1) raise(ErrorKind::InvalidArgument, "corr_distance_matrix: no series");
  if (t < 3) raise(ErrorKind::InvalidArgument, "corr_distance_matrix: series length must be >= 3");

  Eigen::MatrixXd centered = series.rowwise() - series.colwise().mean();
  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    norms(j) = centered.col(j).norm();
    if (!(norms(j) > 0.0)) {
      raise(ErrorKind::Numeric, "corr_distance_matrix: series " + std::to_string(j) +
                                    " has zero variance; correlation undefined");
    }
  }

  DistanceMatrix out;
  out.n = static_cast<int>(n);
  out.d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double corr = centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j));
      double dist = 1.0 - std::abs(corr);
      dist = std::clamp(dist, 0.0, 1.0);
      out.d(i, j) = dist;
      out.d(j, i) = dist;
    }
  }
  return out;
}

std::pair<double, int> minimax_radius(const DistanceMatrix& dist,
                                      const std::vector<int>& member_indices) {
  if (member_indices.empty()) {
    raise(ErrorKind::InvalidArgument, "minimax_radius: empty member set");
  }
  double best = std::numeric_limits<double>::infinity();
  int proto = -1;
  for (int x : member_indices) {
    double dmax = 0.0;
    for (int other : member_indices) dmax = std::max(dmax, dist.d(x, other));
    if (dmax < best || (dmax == best && x < proto)) {
      best = dmax;
      proto = x;
    }
  }
  return {best, proto};
}

namespace {

// Active cluster bookkeeping for the agglomeration. dmax[x] caches
// max_{m in members} d(x, m) for every point x, so the linkage between two
// clusters is a single min-max scan over their member union.
struct Active {
  int node_id;
  int prototype;
  std::vector<int> members;
  Eigen::VectorXd dmax;
};

struct PairEval {
  double height;
  int prototype;
};

PairEval eval_pair(const Active& a, const Active& b) {
  double best = std::numeric_limits<double>::infinity();
  int proto = std::numeric_limits<int>::max();
  auto scan = [&](const std::vector<int>& members) {
    for (int x : members) {
      double dmax = std::max(a.dmax(x), b.dmax(x));
      if (dmax < best || (dmax == best && x < proto)) {
        best = dmax;
        proto = x;
      }
    }
  };
  scan(a.members);
  scan(b.members);
  return {best, proto};
}

}  // namespace

ClusterTree minimax_cluster(const DistanceMatrix& dist) {
  const int n = dist.n;
  if (n < 1) raise(ErrorKind::InvalidArgument, "minimax_cluster: empty distance matrix");

  ClusterTree tree;
  tree.n_leaves = n;
  if (n == 1) return tree;

  std::vector<Active> active;
  active.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Active a;
    a.node_id = i;
    a.prototype = i;
    a.members = {i};
    a.dmax = dist.d.col(i);
    active.push_back(std::move(a));
  }

  // Pairwise linkage cache among active clusters (by slot).
  std::vector<std::vector<PairEval>> link(active.size());
  for (size_t i = 0; i < active.size(); ++i) {
    link[i].resize(i);
    for (size_t j = 0; j < i; ++j) link[i][j] = eval_pair(active[i], active[j]);
  }

  int next_node = n;
  while (active.size() > 1) {
    // Best pair: smallest height, ties by the sorted prototype pair.
    size_t bi = 1, bj = 0;
    for (size_t i = 1; i < active.size(); ++i) {
      for (size_t j = 0; j < i; ++j) {
        const PairEval& cand = link[i][j];
        const PairEval& best = link[bi][bj];
        if (cand.height < best.height) {
          bi = i;
          bj = j;
        } else if (cand.height == best.height && !(i == bi && j == bj)) {
          auto key = [&](size_t a, size_t b) {
            int pa = active[a].prototype, pb = active[b].prototype;
            return std::make_pair(std::min(pa, pb), std::max(pa, pb));
          };
          if (key(i, j) < key(bi, bj)) {
            bi = i;
            bj = j;
          }
        }
      }
    }

    const PairEval chosen = link[bi][bj];
    Active merged;
    merged.node_id = next_node++;
    merged.prototype = chosen.prototype;
    merged.members = active[bj].members;
    merged.members.insert(merged.members.end(), active[bi].members.begin(),
                          active[bi].members.end());
    merged.dmax = active[bi].dmax.cwiseMax(active[bj].dmax);

    tree.merges.push_back(
        {active[bj].node_id, active[bi].node_id, chosen.height, chosen.prototype});

    // Replace slot bj with the merged cluster, drop slot bi.
    active[bj] = std::move(merged);
    active.erase(active.begin() + static_cast<long>(bi));
    link.erase(link.begin() + static_cast<long>(bi));
    for (auto& row : link) {
      if (row.size() > bi) row.erase(row.begin() + static_cast<long>(bi));
    }
    for (size_t i = 0; i < active.size(); ++i) {
      if (i == bj) continue;
      size_t hi = std::max(i, bj), lo = std::min(i, bj);
      link[hi][lo] = eval_pair(active[i], active[bj]);
    }
  }
  return tree;
}

std::vector<int> cut_prototypes(const ClusterTree& tree, const DistanceMatrix& dist,
                                double height_threshold) {
  if (height_threshold < 0.0 || height_threshold > 1.0) {
    raise(ErrorKind::InvalidArgument, "cut_prototypes: threshold must be in [0, 1]");
  }
  const int n = tree.n_leaves;
  // node id -> representative prototype, applying merges at height <= threshold.
  std::vector<int> proto(static_cast<size_t>(n) * 2, -1);
  std::vector<bool> absorbed(static_cast<size_t>(n) * 2, false);
  for (int i = 0; i < n; ++i) proto[static_cast<size_t>(i)] = i;

  for (size_t m = 0; m < tree.merges.size(); ++m) {
    const Merge& merge = tree.merges[m];
    if (merge.height > height_threshold) break;  // heights are non-decreasing
    int id = n + static_cast<int>(m);
    proto[static_cast<size_t>(id)] = merge.prototype;
    absorbed[static_cast<size_t>(merge.left)] = true;
    absorbed[static_cast<size_t>(merge.right)] = true;
  }

  std::vector<int> out;
  for (size_t id = 0; id < proto.size(); ++id) {
    if (proto[id] >= 0 && !absorbed[id]) out.push_back(proto[id]);
  }
  std::sort(out.begin(), out.end());
  (void)dist;
  return out;
}

}  // namespace amf::protoclust
