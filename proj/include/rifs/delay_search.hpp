#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rifs/cluster.hpp"
#include "rifs/delay.hpp"

namespace rifs {

// Heuristic adequacy test for a delay length l. The clustering of the
// l-delay vectors qualifies when
//  - the modal local dimension is below the embedding dimension (the vectors
//    lie on lower-dimensional pieces rather than filling space),
//  - at least one cluster was found and min_coverage of the vectors are
//    labeled,
//  - the separation score is at least min_separation, and
//  - the mean residual to the local models dropped by residual_drop
//    relative to l - 1, or is below max_residual when l - 1 gave no usable
//    clustering or l is the first candidate.
struct DelayQuality {
  double min_separation = 0.5;
  double min_coverage = 0.9;
  double residual_drop = 10.0;
  double max_residual = 1e-2;  // in units of the k-th neighbour distance
};

struct DelayCandidate {
  int l = 0;
  bool clustered = false;  // false when clustering raised an error
  std::string error;
  int clusters = 0;
  int intrinsic_dim = 0;
  double coverage = 0.0;
  double separation = 0.0;
  double residual = 0.0;
  bool qualifies = false;
};

struct DelaySearchResult {
  std::optional<int> l;  // empty when no candidate qualifies
  std::vector<DelayCandidate> candidates;
  std::optional<ClusterModel> model;  // clustering at the chosen l
};

DelaySearchResult search_delay(const ObservationSeries& obs, int l_max = 6, const DelayQuality& quality = {},
                               const ClusterParams& params = {});

}  // namespace rifs
