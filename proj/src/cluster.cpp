#include "rifs/cluster.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>

#include "knn.hpp"
#include "parallel.hpp"
#include "rifs/error.hpp"
#include "rifs/io.hpp"
#include "rifs/poly.hpp"

namespace rifs {

namespace {

using detail::KdTree;
using detail::Points;
using Eigen::MatrixXd;
using Eigen::VectorXd;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRadToDeg = 57.29577951308232;

struct Pca {
  VectorXd mean;
  VectorXd sv;  // descending singular values of the centred patch
  MatrixXd W;   // rows: principal directions, same order
};

Pca pca(const MatrixXd& S) {
  Pca p;
  p.mean = S.colwise().mean().transpose();
  MatrixXd C = S.rowwise() - p.mean.transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(C.transpose() * C);
  const auto d = S.cols();
  p.sv.resize(d);
  p.W.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    p.sv(j) = std::sqrt(std::max(0.0, es.eigenvalues()(d - 1 - j)));
    p.W.row(j) = es.eigenvectors().col(d - 1 - j).transpose();
  }
  return p;
}

MatrixXd gather(Points pts, const std::vector<std::size_t>& idx) {
  MatrixXd S(static_cast<Eigen::Index>(idx.size()), pts.dim);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (int j = 0; j < pts.dim; ++j) S(static_cast<Eigen::Index>(r), j) = pts[idx[r]][j];
  return S;
}

MatrixXd monomial_matrix(const MatrixXd& X, const std::vector<std::vector<int>>& exps) {
  MatrixXd F(X.rows(), static_cast<Eigen::Index>(exps.size()));
  std::vector<double> row(static_cast<std::size_t>(X.cols())), out(exps.size());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(r, j);
    eval_monomials(exps, row.data(), out.data());
    for (std::size_t t = 0; t < exps.size(); ++t) F(r, static_cast<Eigen::Index>(t)) = out[t];
  }
  return F;
}

MatrixXd ridge_solve(const MatrixXd& F, const MatrixXd& Y, double ridge) {
  MatrixXd A = F.transpose() * F;
  const double tr = A.trace() / static_cast<double>(A.rows());
  A.diagonal().array() += ridge * (tr > 0 ? tr : 1.0);
  return A.ldlt().solve(F.transpose() * Y);
}

// Smooth local models of a point patch, used to test whether another patch
// continues the same manifold.
class Chart {
 public:
  enum class Kind {
    Graph,     // normal offsets as a quadratic in PCA tangent coordinates
    Forward,   // last coordinate as a quadratic in the others
    Backward,  // first coordinate as a quadratic in the others
  };

  Chart(Kind kind, const MatrixXd& S, int D) : kind_(kind), D_(D) {
    const auto d = S.cols();
    if (kind == Kind::Graph) {
      Pca p = pca(S);
      c_ = p.mean;
      W_ = p.W;
      MatrixXd C = S.rowwise() - c_.transpose();
      MatrixXd T = C * W_.topRows(D).transpose();
      scale_ = T.cwiseAbs().colwise().maxCoeff().transpose().array() + 1e-300;
      exps_ = monomial_exponents(D, 2);
      MatrixXd F = monomial_matrix(T.array().rowwise() / scale_.transpose().array(), exps_);
      coef_ = ridge_solve(F, C * W_.bottomRows(d - D).transpose(), 1e-8);
    } else {
      exps_ = monomial_exponents(static_cast<int>(d - 1), 2);
      MatrixXd F = monomial_matrix(inputs(S), exps_);
      coef_ = ridge_solve(F, target(S), 1e-12);
    }
  }

  VectorXd residuals(const MatrixXd& Q) const {
    if (kind_ == Kind::Graph) {
      MatrixXd C = Q.rowwise() - c_.transpose();
      MatrixXd T = C * W_.topRows(D_).transpose();
      MatrixXd F = monomial_matrix(T.array().rowwise() / scale_.transpose().array(), exps_);
      MatrixXd R = C * W_.bottomRows(W_.rows() - D_).transpose() - F * coef_;
      return R.rowwise().norm();
    }
    return (target(Q) - monomial_matrix(inputs(Q), exps_) * coef_).cwiseAbs();
  }

 private:
  MatrixXd inputs(const MatrixXd& S) const {
    return kind_ == Kind::Forward ? MatrixXd(S.leftCols(S.cols() - 1)) : MatrixXd(S.rightCols(S.cols() - 1));
  }
  MatrixXd target(const MatrixXd& S) const {
    return kind_ == Kind::Forward ? MatrixXd(S.rightCols(1)) : MatrixXd(S.leftCols(1));
  }

  Kind kind_;
  int D_;
  VectorXd c_, scale_;
  MatrixXd W_, coef_;
  std::vector<std::vector<int>> exps_;
};

double quantile(VectorXd v, double q) {
  std::sort(v.data(), v.data() + v.size());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min<Eigen::Index>(lo + 1, v.size() - 1);
  return v(lo) + (pos - static_cast<double>(lo)) * (v(hi) - v(lo));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Largest principal angle between two D-dimensional subspaces (rows).
double principal_angle_deg(const MatrixXd& A, const MatrixXd& B) {
  Eigen::JacobiSVD<MatrixXd> svd(A * B.transpose());
  double s = svd.singularValues().minCoeff();
  return std::acos(std::clamp(s, 0.0, 1.0)) * kRadToDeg;
}

double offplane(const MatrixXd& T, const VectorXd& dv) {
  const double n = dv.norm();
  if (n == 0.0) return 0.0;
  return (dv - T.transpose() * (T * dv)).norm() / n;
}

struct Fragment {
  std::vector<std::size_t> members;  // global indices, ascending
  std::vector<double> coords;
  std::unique_ptr<KdTree> tree;

  Points pts(int dim) const { return {coords.data(), members.size(), dim}; }
};

struct PairScore {
  double extrapolation = kInf;
  bool pinch = false;
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : p_(n) { std::iota(p_.begin(), p_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (p_[x] != x) x = p_[x] = p_[p_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) p_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> p_;
};

std::vector<std::size_t> argsort(const std::vector<double>& d) {
  std::vector<std::size_t> o(d.size());
  std::iota(o.begin(), o.end(), std::size_t{0});
  std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  return o;
}

class Clusterer {
 public:
  Clusterer(const DelayVectorSet& dvs, const ClusterParams& prm) : dvs_(dvs), prm_(prm) {
    dim_ = dvs.dim();
    pts_ = {dvs.data.data(), dvs.size(), dim_};
    N_ = dvs.size();
    K_ = prm.neighbors > 0 ? prm.neighbors : std::max(20, 2 * dvs.l * dvs.l);
  }

  ClusterModel run();

 private:
  void local_geometry();
  void build_fragments();
  PairScore score_pair(const Fragment& A, const Fragment& B) const;
  MatrixXd tangent_in(const Fragment& F, std::size_t local) const;
  std::vector<std::size_t> merge_groups(double thr, std::vector<std::size_t>* group_of_fragment) const;
  bool remerge(std::vector<int>& labels, int& C, double thr) const;
  void assign(std::vector<int>& labels, int nclusters, double margin, std::vector<double>* best_out,
              std::vector<double>* second_out) const;

  const DelayVectorSet& dvs_;
  const ClusterParams& prm_;
  Points pts_;
  std::size_t N_ = 0;
  int dim_ = 0;
  int K_ = 0;
  int D_ = 1;
  int raw_dim_ = 0;
  double diam_ = 0.0;

  detail::KnnResult knn_;
  std::vector<double> sv_;     // N x dim
  std::vector<double> basis_;  // N x dim x dim
  std::vector<int> di_;
  std::vector<char> clean_;
  std::vector<Fragment> frags_;
  std::vector<std::vector<PairScore>> scores_;
};

void Clusterer::local_geometry() {
  knn_ = detail::knn_self(pts_, static_cast<std::size_t>(K_) + 1);
  sv_.assign(N_ * static_cast<std::size_t>(dim_), 0.0);
  basis_.assign(N_ * static_cast<std::size_t>(dim_ * dim_), 0.0);
  di_.assign(N_, 0);
  detail::parallel_for(N_, [&](std::size_t i) {
    std::vector<std::size_t> nb(knn_.row(i), knn_.row(i) + knn_.k);
    Pca p = pca(gather(pts_, nb));
    const auto d = static_cast<std::size_t>(dim_);
    int cnt = 0;
    for (std::size_t j = 0; j < d; ++j) {
      sv_[i * d + j] = p.sv(static_cast<Eigen::Index>(j));
      if (p.sv(0) > 0 && p.sv(static_cast<Eigen::Index>(j)) / p.sv(0) >= prm_.dim_ratio) ++cnt;
      for (std::size_t c = 0; c < d; ++c)
        basis_[(i * d + j) * d + c] = p.W(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
    }
    di_[i] = cnt;
  });
  std::vector<std::size_t> hist(static_cast<std::size_t>(dim_) + 1, 0);
  for (int d : di_) ++hist[static_cast<std::size_t>(d)];
  raw_dim_ = 1;
  for (int d = 1; d <= dim_; ++d)
    if (hist[static_cast<std::size_t>(d)] > hist[static_cast<std::size_t>(raw_dim_)]) raw_dim_ = d;
  D_ = std::clamp(raw_dim_, 1, dim_ - 1);
  clean_.assign(N_, 0);
  for (std::size_t i = 0; i < N_; ++i) {
    const double* s = &sv_[i * static_cast<std::size_t>(dim_)];
    clean_[i] = s[0] > 0 && s[D_] / s[0] < prm_.clean_ratio && di_[i] <= D_;
  }
}

void Clusterer::build_fragments() {
  const auto d = static_cast<std::size_t>(dim_);
  auto tangent = [&](std::size_t i) {
    MatrixXd T(D_, dim_);
    for (int j = 0; j < D_; ++j)
      for (int c = 0; c < dim_; ++c) T(j, c) = basis_[(i * d + static_cast<std::size_t>(j)) * d + static_cast<std::size_t>(c)];
    return T;
  };
  // candidate edges are evaluated in parallel, then united in index order
  std::vector<std::vector<std::size_t>> links(N_);
  detail::parallel_for(N_, [&](std::size_t i) {
    if (!clean_[i]) return;
    MatrixXd Ti = tangent(i);
    for (std::size_t r = 1; r < knn_.k; ++r) {
      std::size_t j = knn_.row(i)[r];
      if (!clean_[j]) continue;
      MatrixXd Tj = tangent(j);
      if (principal_angle_deg(Ti, Tj) >= prm_.edge_angle_deg) continue;
      VectorXd dv(dim_);
      for (int c = 0; c < dim_; ++c) dv(c) = pts_[j][c] - pts_[i][c];
      if (std::max(offplane(Ti, dv), offplane(Tj, dv)) >= prm_.edge_offplane) continue;
      links[i].push_back(j);
    }
  });
  UnionFind uf(N_);
  for (std::size_t i = 0; i < N_; ++i)
    for (std::size_t j : links[i]) uf.unite(i, j);
  std::map<std::size_t, std::vector<std::size_t>> comps;
  for (std::size_t i = 0; i < N_; ++i)
    if (clean_[i]) comps[uf.find(i)].push_back(i);
  for (auto& [root, members] : comps) {
    if (static_cast<int>(members.size()) < prm_.min_fragment) continue;
    Fragment f;
    f.members = std::move(members);
    for (std::size_t i : f.members) f.coords.insert(f.coords.end(), pts_[i], pts_[i] + dim_);
    frags_.push_back(std::move(f));
  }
  for (auto& f : frags_) f.tree = std::make_unique<KdTree>(f.pts(dim_));
}

MatrixXd Clusterer::tangent_in(const Fragment& F, std::size_t local) const {
  std::vector<std::size_t> idx;
  std::vector<double> dist;
  Points p = F.pts(dim_);
  F.tree->query(p[local], static_cast<std::size_t>(K_), idx, dist);
  return pca(gather(p, idx)).W.topRows(D_);
}

PairScore Clusterer::score_pair(const Fragment& A, const Fragment& B) const {
  PairScore out;
  Points pa = A.pts(dim_), pb = B.pts(dim_);
  std::vector<double> db(pb.n), da(pa.n);
  std::vector<std::size_t> nearest_in_a(pb.n);
  for (std::size_t j = 0; j < pb.n; ++j) db[j] = A.tree->nearest(pb[j], &nearest_in_a[j]);
  const double gap = *std::min_element(db.begin(), db.end());
  if (gap >= prm_.merge_radius * diam_) return out;
  for (std::size_t i = 0; i < pa.n; ++i) da[i] = B.tree->nearest(pa[i]);

  auto ob = argsort(db), oa = argsort(da);
  const auto m = static_cast<std::size_t>(prm_.merge_patch);
  std::vector<std::size_t> sa(oa.begin(), oa.begin() + static_cast<std::ptrdiff_t>(std::min(m, oa.size())));
  std::vector<std::size_t> sb(ob.begin(), ob.begin() + static_cast<std::ptrdiff_t>(std::min(m, ob.size())));
  MatrixXd Sa = gather(pa, sa), Sb = gather(pb, sb);
  const double dist = std::max((Sa.colwise().mean() - Sb.colwise().mean()).norm(), 1e-12);
  const double q = prm_.merge_quantile;
  double sc = kInf;
  for (auto kind : {Chart::Kind::Graph, Chart::Kind::Forward, Chart::Kind::Backward}) {
    Chart ca(kind, Sa, D_), cb(kind, Sb, D_);
    const double self = std::max(quantile(ca.residuals(Sa), q), quantile(cb.residuals(Sb), q)) / dist;
    const double cross = std::max(quantile(ca.residuals(Sb), q), quantile(cb.residuals(Sa), q)) / dist;
    if (!std::isfinite(cross)) continue;
    if (self < prm_.self_gate * cross || cross < 1e-9) sc = std::min(sc, cross);
  }
  out.extrapolation = sc * std::max(1.0, gap / (prm_.merge_gap_scale * diam_));

  if (gap < prm_.pinch_gap * diam_) {
    std::vector<double> angs, offs;
    const auto np = std::min(static_cast<std::size_t>(prm_.pinch_pairs), ob.size());
    for (std::size_t t = 0; t < np; ++t) {
      std::size_t jb = ob[t], ia = nearest_in_a[jb];
      MatrixXd Ta = tangent_in(A, ia), Tb = tangent_in(B, jb);
      VectorXd dv(dim_);
      for (int c = 0; c < dim_; ++c) dv(c) = pb[jb][c] - pa[ia][c];
      angs.push_back(principal_angle_deg(Ta, Tb));
      offs.push_back(std::max(offplane(Ta, dv), offplane(Tb, dv)));
    }
    out.pinch = median(angs) < prm_.pinch_angle_deg && median(offs) < prm_.pinch_offplane;
  }
  return out;
}

// Groups of fragments that survive the size cut, as lists of fragment ids;
// returns the number of such groups through the vector size.
std::vector<std::size_t> Clusterer::merge_groups(double thr, std::vector<std::size_t>* group_of_fragment) const {
  const std::size_t F = frags_.size();
  UnionFind uf(F);
  for (std::size_t a = 0; a < F; ++a)
    for (std::size_t b = a + 1; b < F; ++b) {
      const auto& s = scores_[a][b - a - 1];
      if (s.extrapolation < thr || s.pinch) uf.unite(a, b);
    }
  std::map<std::size_t, std::size_t> size;
  for (std::size_t a = 0; a < F; ++a) size[uf.find(a)] += frags_[a].members.size();
  const double min_size = std::max(prm_.min_cluster_fraction * static_cast<double>(N_), static_cast<double>(K_));
  std::vector<std::size_t> roots;
  for (auto& [root, s] : size)
    if (static_cast<double>(s) >= min_size) roots.push_back(root);
  if (group_of_fragment) {
    group_of_fragment->assign(F, SIZE_MAX);
    for (std::size_t a = 0; a < F; ++a) {
      auto it = std::find(roots.begin(), roots.end(), uf.find(a));
      if (it != roots.end()) (*group_of_fragment)[a] = static_cast<std::size_t>(it - roots.begin());
    }
  }
  return roots;
}

// Grown clusters are scored against each other like fragments; pieces of
// one manifold that were too far apart before assignment now meet.
bool Clusterer::remerge(std::vector<int>& labels, int& C, double thr) const {
  std::vector<Fragment> cl(static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < N_; ++i)
    if (labels[i] != kGap) {
      auto& f = cl[static_cast<std::size_t>(labels[i] - 1)];
      f.members.push_back(i);
      f.coords.insert(f.coords.end(), pts_[i], pts_[i] + dim_);
    }
  for (auto& f : cl)
    if (f.members.size() > static_cast<std::size_t>(K_)) f.tree = std::make_unique<KdTree>(f.pts(dim_));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < cl.size(); ++a)
    for (std::size_t b = a + 1; b < cl.size(); ++b)
      if (cl[a].tree && cl[b].tree) pairs.emplace_back(a, b);
  std::vector<PairScore> sc(pairs.size());
  detail::parallel_for(pairs.size(), [&](std::size_t p) { sc[p] = score_pair(cl[pairs[p].first], cl[pairs[p].second]); }, 1);
  UnionFind uf(cl.size());
  bool merged = false;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    if (sc[p].extrapolation < thr) {  // grown clusters touch where manifolds cross, so no pinch test
      uf.unite(pairs[p].first, pairs[p].second);
      merged = true;
    }
  if (!merged) return false;
  std::map<std::size_t, int> id;
  for (std::size_t a = 0; a < cl.size(); ++a) id.emplace(uf.find(a), static_cast<int>(id.size()) + 1);
  for (int& lab : labels)
    if (lab != kGap) lab = id[uf.find(static_cast<std::size_t>(lab - 1))];
  C = static_cast<int>(id.size());
  return true;
}

void Clusterer::assign(std::vector<int>& labels, int nclusters, double margin, std::vector<double>* best_out,
                       std::vector<double>* second_out) const {
  const auto C = static_cast<std::size_t>(nclusters);
  std::vector<double> R(N_ * C, kInf);
  std::vector<char> reach(N_ * C, 0);  // nearest member close enough for c to win
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<std::size_t> members;
    std::vector<double> coords;
    for (std::size_t i = 0; i < N_; ++i)
      if (labels[i] == static_cast<int>(c) + 1) {
        members.push_back(i);
        coords.insert(coords.end(), pts_[i], pts_[i] + dim_);
      }
    if (members.size() < static_cast<std::size_t>(D_) + 2) continue;
    Points mp{coords.data(), members.size(), dim_};
    KdTree tree(mp);
    detail::parallel_for(N_, [&](std::size_t i) {
      std::vector<std::size_t> idx;
      std::vector<double> dist;
      tree.query(pts_[i], static_cast<std::size_t>(K_) + 1, idx, dist);
      // drop the point itself when it is a member, else the farthest
      std::size_t skip = idx.size() - 1;
      for (std::size_t t = 0; t < idx.size(); ++t)
        if (members[idx[t]] == i) {
          skip = t;
          break;
        }
      std::vector<std::size_t> nb;
      double dn = kInf;
      for (std::size_t t = 0; t < idx.size(); ++t)
        if (t != skip) {
          nb.push_back(idx[t]);
          dn = std::min(dn, dist[t]);
        }
      Chart chart(Chart::Kind::Graph, gather(mp, nb), D_);
      MatrixXd q(1, dim_);
      for (int j = 0; j < dim_; ++j) q(0, j) = pts_[i][j];
      R[i * C + c] = chart.residuals(q)(0);
      reach[i * C + c] = dn <= prm_.assign_reach * knn_.drow(i)[knn_.k - 1];
    });
  }
  std::vector<int> out(N_, kGap);
  if (best_out) best_out->assign(N_, kInf);
  if (second_out) second_out->assign(N_, kInf);
  for (std::size_t i = 0; i < N_; ++i) {
    double best = kInf, second = kInf;
    int arg = -1;
    for (std::size_t c = 0; c < C; ++c) {
      double r = R[i * C + c];
      if (r < best) {
        second = best;
        best = r;
        arg = static_cast<int>(c);
      } else if (r < second) {
        second = r;
      }
    }
    const double dK = knn_.drow(i)[knn_.k - 1];
    if (arg >= 0 && reach[i * C + static_cast<std::size_t>(arg)] && std::isfinite(best) && best < (1.0 - margin) * second && best < prm_.assign_tolerance * dK)
      out[i] = arg + 1;
    if (best_out) (*best_out)[i] = best;
    if (second_out) (*second_out)[i] = second;
  }
  labels = std::move(out);
}

ClusterModel Clusterer::run() {
  if (dim_ < 2) fail(ErrorCode::InvalidArgument, "cluster: delay vectors need at least 2 coordinates");
  if (N_ < 10 * static_cast<std::size_t>(K_))
    fail(ErrorCode::InvalidArgument, "cluster: " + std::to_string(N_) + " vectors, need at least 10 x neighbourhood size = " +
                                         std::to_string(10 * K_));
  if (!(prm_.ambiguity >= 0.0 && prm_.ambiguity < 1.0))
    fail(ErrorCode::InvalidArgument, "cluster: ambiguity margin must lie in [0,1)");
  {
    std::vector<double> lo(static_cast<std::size_t>(dim_), kInf), hi(static_cast<std::size_t>(dim_), -kInf);
    for (std::size_t i = 0; i < N_; ++i)
      for (int j = 0; j < dim_; ++j) {
        lo[static_cast<std::size_t>(j)] = std::min(lo[static_cast<std::size_t>(j)], pts_[i][j]);
        hi[static_cast<std::size_t>(j)] = std::max(hi[static_cast<std::size_t>(j)], pts_[i][j]);
      }
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) s += std::pow(hi[static_cast<std::size_t>(j)] - lo[static_cast<std::size_t>(j)], 2);
    diam_ = std::sqrt(s);
    if (!(diam_ > 0.0) || !std::isfinite(diam_))
      fail(ErrorCode::InvalidArgument, "cluster: degenerate data (all vectors identical or non-finite)");
  }

  local_geometry();
  build_fragments();

  const std::size_t F = frags_.size();
  scores_.assign(F, {});
  for (std::size_t a = 0; a < F; ++a) scores_[a].resize(F - a - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < F; ++a)
    for (std::size_t b = a + 1; b < F; ++b) pairs.emplace_back(a, b);
  detail::parallel_for(
      pairs.size(), [&](std::size_t p) { scores_[pairs[p].first][pairs[p].second - pairs[p].first - 1] = score_pair(frags_[pairs[p].first], frags_[pairs[p].second]); },
      4);

  double thr = prm_.merge_threshold;
  if (prm_.expected_k) {
    const auto want = static_cast<std::size_t>(*prm_.expected_k);
    if (merge_groups(thr, nullptr).size() != want) {
      // candidate thresholds just above each finite score; the group count
      // does not increase as the threshold grows
      std::vector<double> cand{0.0};
      for (auto& row : scores_)
        for (auto& s : row)
          if (std::isfinite(s.extrapolation)) cand.push_back(std::nextafter(s.extrapolation, kInf));
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      std::size_t lo = 0, hi = cand.size() - 1;
      if (merge_groups(cand[lo], nullptr).size() < want || merge_groups(cand[hi], nullptr).size() > want)
        fail(ErrorCode::Numerical, "cluster: no merge threshold yields " + std::to_string(want) + " clusters");
      while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (merge_groups(cand[mid], nullptr).size() > want)
          lo = mid;
        else
          hi = mid;
      }
      thr = merge_groups(cand[lo], nullptr).size() == want ? cand[lo] : cand[hi];
      if (merge_groups(thr, nullptr).size() != want)
        fail(ErrorCode::Numerical, "cluster: no merge threshold yields " + std::to_string(want) + " clusters");
    }
  }

  std::vector<std::size_t> group_of;
  const auto groups = merge_groups(thr, &group_of);
  std::vector<int> labels(N_, kGap);
  for (std::size_t a = 0; a < F; ++a)
    if (group_of[a] != SIZE_MAX)
      for (std::size_t i : frags_[a].members) labels[i] = static_cast<int>(group_of[a]) + 1;
  int C = static_cast<int>(groups.size());

  ClusterModel cm;
  std::vector<double> best, second;
  if (C > 0) {
    const double internal_margin = ClusterParams{}.ambiguity;
    int rounds = 0;
    for (int pass = 0; pass <= prm_.remerge_passes; ++pass) {
      for (; rounds + 1 < prm_.assign_rounds; ++rounds) {
        std::vector<int> prev = labels;
        assign(labels, C, internal_margin, nullptr, nullptr);
        if (labels == prev) break;
      }
      if (pass == prm_.remerge_passes || !remerge(labels, C, thr)) break;
      rounds = 0;
    }
    if (prm_.assign_rounds > 0) assign(labels, C, prm_.ambiguity, &best, &second);
  }

  // relabel by first appearance, dropping clusters left empty
  std::vector<int> remap(static_cast<std::size_t>(C) + 1, 0);
  int next = 0;
  for (int& lab : labels) {
    if (lab == kGap) continue;
    if (!remap[static_cast<std::size_t>(lab)]) remap[static_cast<std::size_t>(lab)] = ++next;
    lab = remap[static_cast<std::size_t>(lab)];
  }
  cm.num_clusters = next;
  cm.assignments = std::move(labels);
  cm.neighbors = K_;
  cm.intrinsic_dim = raw_dim_;
  cm.chart_dim = D_;
  cm.fragments = static_cast<int>(F);
  cm.merge_threshold_used = thr;
  cm.clean_fraction = static_cast<double>(std::count(clean_.begin(), clean_.end(), 1)) / static_cast<double>(N_);
  cm.cluster_sizes.assign(static_cast<std::size_t>(next), 0);
  std::vector<std::vector<std::size_t>> dim_hist(static_cast<std::size_t>(next),
                                                  std::vector<std::size_t>(static_cast<std::size_t>(dim_) + 1, 0));
  double sep = 0.0, res = 0.0;
  std::size_t labeled = 0;
  for (std::size_t i = 0; i < N_; ++i) {
    int lab = cm.assignments[i];
    if (lab == kGap) {
      ++cm.ambiguous;
      continue;
    }
    ++labeled;
    ++cm.cluster_sizes[static_cast<std::size_t>(lab - 1)];
    if (clean_[i]) ++dim_hist[static_cast<std::size_t>(lab - 1)][static_cast<std::size_t>(di_[i])];
    if (!best.empty()) {
      sep += std::isfinite(second[i]) ? 1.0 - best[i] / second[i] : 1.0;
      res += best[i] / knn_.drow(i)[knn_.k - 1];
    } else {
      sep += 1.0;
    }
  }
  if (labeled) {
    cm.separation_score = sep / static_cast<double>(labeled);
    cm.mean_residual = res / static_cast<double>(labeled);
  }
  for (auto& h : dim_hist) {
    int d = 1;
    for (int j = 1; j <= dim_; ++j)
      if (h[static_cast<std::size_t>(j)] > h[static_cast<std::size_t>(d)]) d = j;
    cm.dimensions.push_back(d);
  }
  return cm;
}

}  // namespace

ClusterModel cluster(const DelayVectorSet& dvs, const ClusterParams& params) {
  Clusterer c(dvs, params);
  return c.run();
}

SymbolSequence label_sequence(const ClusterModel& cm, const DelayVectorSet& dvs) {
  if (cm.assignments.size() != dvs.size())
    fail(ErrorCode::InvalidArgument, "label_sequence: cluster model was fitted on a different vector set");
  return SymbolSequence{std::max(cm.num_clusters, 1), cm.assignments};
}

int estimate_local_dimension(const DelayVectorSet& dvs, std::size_t index, int neighbors, double ratio) {
  if (index >= dvs.size()) fail(ErrorCode::InvalidArgument, "estimate_local_dimension: index out of range");
  if (neighbors < 2 * dvs.l)
    fail(ErrorCode::InvalidArgument, "estimate_local_dimension: neighbourhood size must be at least 2 l");
  Points pts{dvs.data.data(), dvs.size(), dvs.dim()};
  KdTree tree(pts);
  std::vector<std::size_t> idx;
  std::vector<double> dist;
  tree.query(pts[index], static_cast<std::size_t>(neighbors) + 1, idx, dist);
  Pca p = pca(gather(pts, idx));
  if (!(p.sv(0) > 0.0)) fail(ErrorCode::InvalidArgument, "estimate_local_dimension: degenerate neighbourhood");
  int d = 0;
  for (Eigen::Index j = 0; j < p.sv.size(); ++j)
    if (p.sv(j) / p.sv(0) >= ratio) ++d;
  return d;
}

std::string cluster_report(const ClusterModel& cm) {
  std::ostringstream os;
  os << "num_clusters " << cm.num_clusters << '\n';
  os << "separation_score " << fmt(cm.separation_score) << '\n';
  os << "mean_residual " << fmt(cm.mean_residual) << '\n';
  os << "ambiguous " << cm.ambiguous << '\n';
  os << "neighbors " << cm.neighbors << '\n';
  os << "intrinsic_dim " << cm.intrinsic_dim << '\n';
  os << "clean_fraction " << fmt(cm.clean_fraction) << '\n';
  os << "fragments " << cm.fragments << '\n';
  os << "merge_threshold " << fmt(cm.merge_threshold_used) << '\n';
  for (int c = 0; c < cm.num_clusters; ++c)
    os << "cluster " << c + 1 << " size " << cm.cluster_sizes[static_cast<std::size_t>(c)] << " dim "
       << cm.dimensions[static_cast<std::size_t>(c)] << '\n';
  return os.str();
}

namespace {

// Minimum-cost assignment of rows to columns for an n x n matrix.
std::vector<int> hungarian(const std::vector<std::vector<double>>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<double> u(static_cast<std::size_t>(n) + 1), v(static_cast<std::size_t>(n) + 1);
  std::vector<int> p(static_cast<std::size_t>(n) + 1), way(static_cast<std::size_t>(n) + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j)
        if (!used[static_cast<std::size_t>(j)]) {
          double cur = a[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] - u[static_cast<std::size_t>(i0)] -
                       v[static_cast<std::size_t>(j)];
          if (cur < minv[static_cast<std::size_t>(j)]) {
            minv[static_cast<std::size_t>(j)] = cur;
            way[static_cast<std::size_t>(j)] = j0;
          }
          if (minv[static_cast<std::size_t>(j)] < delta) {
            delta = minv[static_cast<std::size_t>(j)];
            j1 = j;
          }
        }
      for (int j = 0; j <= n; ++j)
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)]) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

}  // namespace

double label_purity(const std::vector<int>& labels, const std::vector<int>& truth) {
  if (labels.size() != truth.size()) fail(ErrorCode::InvalidArgument, "label_purity: length mismatch");
  std::map<int, int> li, ti;
  std::size_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] <= 0 || truth[i] <= 0) continue;
    li.emplace(labels[i], static_cast<int>(li.size()));
    ti.emplace(truth[i], static_cast<int>(ti.size()));
    ++total;
  }
  if (total == 0) return 0.0;
  const std::size_t n = std::max(li.size(), ti.size());
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] <= 0 || truth[i] <= 0) continue;
    cost[static_cast<std::size_t>(li[labels[i]])][static_cast<std::size_t>(ti[truth[i]])] -= 1.0;
  }
  auto match = hungarian(cost);
  double hit = 0.0;
  for (std::size_t r = 0; r < n; ++r) hit -= cost[r][static_cast<std::size_t>(match[r])];
  return hit / static_cast<double>(total);
}

}  // namespace rifs
