#include "rifs/delay_search.hpp"

#include <cmath>
#include <limits>

#include "rifs/error.hpp"

namespace rifs {

DelaySearchResult search_delay(const ObservationSeries& obs, int l_max, const DelayQuality& q,
                               const ClusterParams& params) {
  if (l_max < 2) fail(ErrorCode::InvalidArgument, "search_delay: l_max must be at least 2");
  DelaySearchResult res;
  double prev_residual = std::numeric_limits<double>::quiet_NaN();
  for (int l = 2; l <= l_max; ++l) {
    DelayCandidate c;
    c.l = l;
    if (obs.size() < static_cast<std::size_t>(l)) break;
    DelayVectorSet dvs = embed(obs, l);
    ClusterModel cm;
    try {
      cm = cluster(dvs, params);
      c.clustered = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidArgument) throw;
      c.error = e.what();
    }
    if (c.clustered) {
      c.clusters = cm.num_clusters;
      c.intrinsic_dim = cm.intrinsic_dim;
      c.coverage = dvs.size() ? 1.0 - static_cast<double>(cm.ambiguous) / static_cast<double>(dvs.size()) : 0.0;
      c.separation = cm.separation_score;
      c.residual = cm.num_clusters > 0 ? cm.mean_residual : std::numeric_limits<double>::infinity();
      const bool usable_prev = std::isfinite(prev_residual);
      const bool residual_ok =
          usable_prev ? c.residual * q.residual_drop <= prev_residual : c.residual <= q.max_residual;
      c.qualifies = c.intrinsic_dim < dvs.dim() && c.clusters >= 1 && c.coverage >= q.min_coverage &&
                    c.separation >= q.min_separation && residual_ok;
      prev_residual = c.residual;
    } else {
      prev_residual = std::numeric_limits<double>::quiet_NaN();
    }
    res.candidates.push_back(c);
    if (c.qualifies) {
      res.l = l;
      res.model = std::move(cm);
      break;
    }
  }
  return res;
}

}  // namespace rifs
