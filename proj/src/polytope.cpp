#include "dampc/polytope.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>

#include "dampc/errors.hpp"

namespace dampc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

SolveResult lp(const MatrixXd& H, const VectorXd& h, const VectorXd& cost) {
  ConvexProblem p;
  p.resize(static_cast<int>(cost.size()));
  p.cost = cost;
  p.b_in = h;
  for (int r = 0; r < H.rows(); ++r)
    for (int c = 0; c < H.cols(); ++c)
      if (H(r, c) != 0.0) p.in_triplets.emplace_back(r, c, H(r, c));
  return solve_convex(p);
}

// Key for vertex deduplication at tolerance tol.
std::vector<std::int64_t> round_key(const VectorXd& x, double tol) {
  std::vector<std::int64_t> k(x.size());
  for (int i = 0; i < x.size(); ++i) k[i] = std::llround(x[i] / tol);
  return k;
}

}  // namespace

Polytope::Polytope(MatrixXd H, VectorXd h) : H_(std::move(H)), h_(std::move(h)) {
  if (H_.rows() != h_.size()) throw DimensionMismatch("Polytope: H rows != h size");
  if (H_.rows() == 0 || H_.cols() == 0) throw DimensionMismatch("Polytope: empty description");
  for (int i = 0; i < dim(); ++i) {
    VectorXd d = VectorXd::Zero(dim());
    d[i] = 1.0;
    support(d);  // throws Unbounded / InfeasibleSet per axis direction
    d[i] = -1.0;
    support(d);
  }
  auto [c, r] = chebyshev_ball();
  (void)c;
  if (r < -1e-9) throw InfeasibleSet("Polytope: empty set");
}

Polytope Polytope::inf_ball(int dim, double radius) {
  MatrixXd H(2 * dim, dim);
  H << MatrixXd::Identity(dim, dim), -MatrixXd::Identity(dim, dim);
  return Polytope(H, VectorXd::Constant(2 * dim, radius));
}

Polytope Polytope::box(const VectorXd& lo, const VectorXd& hi) {
  const int d = static_cast<int>(lo.size());
  MatrixXd H(2 * d, d);
  H << MatrixXd::Identity(d, d), -MatrixXd::Identity(d, d);
  VectorXd h(2 * d);
  h << hi, -lo;
  return Polytope(H, h);
}

double Polytope::support(const VectorXd& d) const {
  return d.dot(support_point(d));
}

Eigen::VectorXd Polytope::support_point(const VectorXd& d) const {
  if (d.size() != dim()) throw DimensionMismatch("support: direction size");
  SolveResult r = lp(H_, h_, -d);
  if (r.status == SolveStatus::Infeasible) throw InfeasibleSet("support: empty polytope");
  if (r.status == SolveStatus::Unbounded) throw Unbounded("support: unbounded direction");
  if (r.status != SolveStatus::Optimal) throw Error("support: LP failed: " + to_string(r.status));
  return r.x;
}

bool Polytope::contains(const VectorXd& x, double tol) const {
  if (x.size() != dim()) throw DimensionMismatch("contains: point size");
  return ((H_ * x - h_).array() <= tol).all();
}

std::pair<VectorXd, double> Polytope::chebyshev_ball() const {
  const int d = dim();
  ConvexProblem p;
  p.resize(d + 1);
  p.cost[d] = -1.0;  // max r
  const int m = num_rows();
  p.b_in.resize(m + 1);
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < d; ++c)
      if (H_(i, c) != 0.0) p.in_triplets.emplace_back(i, c, H_(i, c));
    p.in_triplets.emplace_back(i, d, H_.row(i).norm());
    p.b_in[i] = h_[i];
  }
  p.in_triplets.emplace_back(m, d, 1.0);  // guard: r bounded above
  p.b_in[m] = 1e9;
  SolveResult r = solve_convex(p);
  if (r.status != SolveStatus::Optimal) throw InfeasibleSet("chebyshev_ball: LP failed");
  return {r.x.head(d), r.x[d]};
}

Polytope Polytope::normalized() const {
  if ((h_.array() <= 1e-12).any())
    throw Error("normalized: origin not strictly inside (h_i <= 0)");
  MatrixXd H = H_.array().colwise() / h_.array();
  Polytope out;
  out.H_ = H;
  out.h_ = VectorXd::Ones(num_rows());
  return out;
}

Polytope Polytope::pruned(double tol) const {
  // drop exact duplicate rows first (normalized comparison)
  std::vector<int> rows;
  for (int i = 0; i < num_rows(); ++i) {
    bool dup = false;
    const double ni = H_.row(i).norm();
    for (int j : rows) {
      const double nj = H_.row(j).norm();
      if ((H_.row(i) / ni - H_.row(j) / nj).cwiseAbs().maxCoeff() < 1e-12 &&
          std::abs(h_[i] / ni - h_[j] / nj) < 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) rows.push_back(i);
  }
  std::vector<char> keep(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<int> others;
    for (std::size_t j = 0; j < rows.size(); ++j)
      if (j != i && keep[j]) others.push_back(rows[j]);
    if (others.empty()) continue;
    MatrixXd Ho(others.size(), dim());
    VectorXd ho(others.size());
    for (std::size_t j = 0; j < others.size(); ++j) {
      Ho.row(j) = H_.row(others[j]);
      ho[j] = h_[others[j]];
    }
    SolveResult r = lp(Ho, ho, -H_.row(rows[i]).transpose());
    if (r.status == SolveStatus::Optimal && -r.objective <= h_[rows[i]] - tol) keep[i] = 0;
  }
  std::vector<int> final_rows;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (keep[i]) final_rows.push_back(rows[i]);
  Polytope out;
  out.H_.resize(final_rows.size(), dim());
  out.h_.resize(final_rows.size());
  for (std::size_t i = 0; i < final_rows.size(); ++i) {
    out.H_.row(i) = H_.row(final_rows[i]);
    out.h_[i] = h_[final_rows[i]];
  }
  return out;
}

const std::vector<VectorXd>& Polytope::vertices(double tol) const {
  if (!verts_.empty()) return verts_;
  const int d = dim();
  if (d > 8) throw DimensionTooLarge("enumerate_vertices: dim > 8");
  const int m = num_rows();

  auto [center, radius] = chebyshev_ball();
  if (radius < 1e-12) {
    // flat or near-flat set: fall back to the combinatorial route
    verts_ = enumerate_vertices_brute_force(H_, h_, tol);
    return verts_;
  }
  const double scale = std::max(1.0, h_.cwiseAbs().maxCoeff());
  const double act_tol = 1e-8 * scale;

  // Crawl from the interior point to a first vertex: repeatedly move in a
  // direction inside the current active-row null space until d
  // independent rows are active.
  VectorXd x = center;
  std::uint64_t rng = 0x9e3779b97f4a7c15ULL;
  auto next_dir = [&]() {
    VectorXd g(d);
    for (int i = 0; i < d; ++i) {
      rng ^= rng << 13;
      rng ^= rng >> 7;
      rng ^= rng << 17;
      g[i] = static_cast<double>(static_cast<std::int64_t>(rng >> 12)) / (1ULL << 51);
    }
    return g;
  };
  for (int guard = 0; guard < 16 * d; ++guard) {
    std::vector<int> act;
    for (int r = 0; r < m; ++r)
      if (h_[r] - H_.row(r).dot(x) <= act_tol) act.push_back(r);
    VectorXd g = next_dir();
    if (!act.empty()) {
      MatrixXd Ha(act.size(), d);
      for (std::size_t i = 0; i < act.size(); ++i) Ha.row(i) = H_.row(act[i]);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(Ha.transpose());
      qr.setThreshold(1e-9);
      if (act.size() >= static_cast<std::size_t>(d) && qr.rank() == d) break;
      // project onto null space of active normals
      MatrixXd Q = qr.householderQ() * MatrixXd::Identity(d, static_cast<int>(qr.rank()));
      g -= Q * (Q.transpose() * g);
    }
    if (g.norm() < 1e-12) continue;
    g.normalize();
    double t = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; ++r) {
      const double du = H_.row(r).dot(g);
      if (du > 1e-12) t = std::min(t, std::max(0.0, h_[r] - H_.row(r).dot(x)) / du);
    }
    if (!std::isfinite(t)) throw Unbounded("enumerate_vertices: unbounded set");
    x += t * g;
  }

  // BFS over the vertex graph via basis pivots.
  std::map<std::vector<std::int64_t>, VectorXd> seen;
  std::queue<VectorXd> todo;
  degenerate_ = 0;

  auto polish = [&](VectorXd v) {
    std::vector<int> act;
    for (int r = 0; r < m; ++r)
      if (h_[r] - H_.row(r).dot(v) <= act_tol * 10) act.push_back(r);
    if (act.size() < static_cast<std::size_t>(d)) return v;
    MatrixXd Ha(act.size(), d);
    VectorXd ha(act.size());
    for (std::size_t i = 0; i < act.size(); ++i) {
      Ha.row(i) = H_.row(act[i]);
      ha[i] = h_[act[i]];
    }
    return MatrixXd(Ha.transpose() * Ha)
        .ldlt()
        .solve(Ha.transpose() * ha)
        .eval();
  };

  auto push_vertex = [&](const VectorXd& v) {
    VectorXd p = polish(v);
    if (!contains(p, 1e-6 * scale)) p = v;
    if (!contains(p, 1e-6 * scale)) return;
    auto key = round_key(p, tol);
    if (seen.emplace(key, p).second) todo.push(p);
  };
  push_vertex(x);
  if (seen.empty()) {
    verts_ = enumerate_vertices_brute_force(H_, h_, tol);
    return verts_;
  }

  while (!todo.empty()) {
    VectorXd v = todo.front();
    todo.pop();
    std::vector<int> act;
    for (int r = 0; r < m; ++r)
      if (h_[r] - H_.row(r).dot(v) <= act_tol) act.push_back(r);
    const int a = static_cast<int>(act.size());
    if (a < d) continue;  // drifted point; polish failed, skip
    if (a > d) ++degenerate_;

    // enumerate independent d-subsets of the active rows (all of them if
    // the vertex is simple, a combinatorial sweep if degenerate)
    std::vector<int> comb(d);
    for (int i = 0; i < d; ++i) comb[i] = i;
    auto advance = [&]() {
      int i = d - 1;
      while (i >= 0 && comb[i] == a - d + i) --i;
      if (i < 0) return false;
      ++comb[i];
      for (int j = i + 1; j < d; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    };
    long combos = 0;
    do {
      if (++combos > 20000) break;  // degenerate blow-up guard
      MatrixXd Hs(d, d);
      for (int i = 0; i < d; ++i) Hs.row(i) = H_.row(act[comb[i]]);
      Eigen::FullPivLU<MatrixXd> lu(Hs);
      lu.setThreshold(1e-9);
      if (lu.rank() < d) continue;
      for (int i = 0; i < d; ++i) {
        VectorXd e = VectorXd::Zero(d);
        e[i] = -1.0;
        VectorXd u = lu.solve(e);
        const double un = u.norm();
        if (un < 1e-14) continue;
        u /= un;
        double t = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
          const double du = H_.row(r).dot(u);
          if (du > 1e-10) t = std::min(t, std::max(0.0, h_[r] - H_.row(r).dot(v)) / du);
        }
        if (!std::isfinite(t)) throw Unbounded("enumerate_vertices: unbounded edge");
        if (t < tol * 0.5) continue;  // degenerate pivot, not a true edge
        push_vertex(v + t * u);
      }
    } while (advance());
  }

  // final pass: keep extreme points only, merge near-duplicates
  std::vector<VectorXd> out;
  for (auto& [k, v] : seen) {
    std::vector<int> act;
    for (int r = 0; r < m; ++r)
      if (h_[r] - H_.row(r).dot(v) <= act_tol * 10) act.push_back(r);
    MatrixXd Ha(act.size(), d);
    for (std::size_t i = 0; i < act.size(); ++i) Ha.row(i) = H_.row(act[i]);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(Ha);
    qr.setThreshold(1e-9);
    if (qr.rank() < d) continue;
    bool dup = false;
    for (const auto& u : out)
      if ((u - v).cwiseAbs().maxCoeff() < tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(v);
  }
  verts_ = std::move(out);
  return verts_;
}

std::vector<VectorXd> enumerate_vertices_brute_force(const MatrixXd& H, const VectorXd& h,
                                                     double tol) {
  const int m = static_cast<int>(H.rows());
  const int d = static_cast<int>(H.cols());
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  std::map<std::vector<std::int64_t>, VectorXd> seen;
  std::vector<int> comb(d);
  for (int i = 0; i < d; ++i) comb[i] = i;
  auto advance = [&]() {
    int i = d - 1;
    while (i >= 0 && comb[i] == m - d + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int j = i + 1; j < d; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };
  if (m < d) return {};
  do {
    MatrixXd Hs(d, d);
    VectorXd hs(d);
    for (int i = 0; i < d; ++i) {
      Hs.row(i) = H.row(comb[i]);
      hs[i] = h[comb[i]];
    }
    Eigen::FullPivLU<MatrixXd> lu(Hs);
    lu.setThreshold(1e-9);
    if (lu.rank() < d) continue;
    VectorXd x = lu.solve(hs);
    if (((H * x - h).array() <= 1e-7 * scale).all()) seen.emplace(round_key(x, tol), x);
  } while (advance());
  std::vector<VectorXd> out;
  out.reserve(seen.size());
  for (auto& [k, v] : seen) {
    bool dup = false;
    for (const auto& u : out)
      if ((u - v).cwiseAbs().maxCoeff() < tol) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(v);
  }
  return out;
}

}  // namespace dampc
