#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rifs/delay.hpp"
#include "rifs/markov.hpp"

namespace rifs {

// Multi-manifold clustering of delay vectors.
//
// 1. Local PCA on every k-nearest-neighbour patch gives a tangent space and a
//    pointwise dimension. Points whose patch is flat to within
//    clean_ratio are "clean".
// 2. Clean neighbours with aligned tangent spaces (principal angle and
//    off-plane chord below thresholds) are linked; connected components are
//    fragments.
// 3. Fragments are merged when a smooth chart fitted on one predicts the
//    other (extrapolation score), or when they meet at a pinch with agreeing
//    tangent planes.
// 4. Every point is then assigned to the cluster whose local quadratic model
//    fits it best, unless the two best residuals are within the ambiguity
//    margin. Assignment repeats until labels settle, and grown clusters
//    are put through the merge tests again.
struct ClusterParams {
  int neighbors = 0;  // 0: max(20, 2 l^2)
  double dim_ratio = 0.1;
  double clean_ratio = 0.02;
  double edge_angle_deg = 5.0;
  double edge_offplane = 0.05;
  int min_fragment = 40;

  double merge_threshold = 0.02;
  int merge_patch = 150;
  double merge_quantile = 0.9;
  double self_gate = 0.1;
  double merge_radius = 0.18;  // hard cap on fragment gap, fraction of data diameter
  double merge_gap_scale = 0.1;  // gaps beyond this fraction of the diameter inflate the score

  double pinch_angle_deg = 12.3;
  double pinch_offplane = 0.15;
  double pinch_gap = 0.015;  // fraction of data diameter
  int pinch_pairs = 5;

  double min_cluster_fraction = 0.01;
  double ambiguity = 0.2;
  double assign_tolerance = 0.05;  // residual cap, in units of the k-th neighbour distance
  double assign_reach = 3.0;       // nearest member must lie within this many k-th neighbour distances
  int remerge_passes = 2;  // merge tests repeated on grown clusters
  int assign_rounds = 30;  // upper bound; stops once labels no longer change

  std::optional<int> expected_k;
  std::uint64_t seed = 0;  // the algorithm has no randomized step; kept for interface stability
};

struct ClusterModel {
  int num_clusters = 0;
  std::vector<int> assignments;  // 1..num_clusters, kGap (0) for ambiguous
  std::vector<int> dimensions;   // per cluster
  double separation_score = 0.0;

  // diagnostics
  int neighbors = 0;
  int intrinsic_dim = 0;  // modal pointwise dimension, uncapped
  int chart_dim = 0;      // dimension used for tangent models (<= l - 1)
  double clean_fraction = 0.0;
  int fragments = 0;
  double mean_residual = 0.0;  // labeled points, in units of the k-th neighbour distance
  std::size_t ambiguous = 0;
  double merge_threshold_used = 0.0;
  std::vector<std::size_t> cluster_sizes;
};

ClusterModel cluster(const DelayVectorSet& dvs, const ClusterParams& params = {});

SymbolSequence label_sequence(const ClusterModel& cm, const DelayVectorSet& dvs);

int estimate_local_dimension(const DelayVectorSet& dvs, std::size_t index, int neighbors, double ratio = 0.1);

std::string cluster_report(const ClusterModel& cm);

// Fraction of labeled positions whose label matches `truth` under the best
// one-to-one relabeling (Hungarian assignment). Gaps in either are skipped.
double label_purity(const std::vector<int>& labels, const std::vector<int>& truth);

}  // namespace rifs
