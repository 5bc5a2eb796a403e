#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dampc/solver.hpp"

namespace dampc {

/// Bounded polyhedron {x | H x <= h} with an optional cached vertex list.
///
/// Values are immutable after construction: the vertex cache is filled at
/// most once (lazily or at construction) and then frozen, so Polytope can
/// be shared freely across simulation workers.
class Polytope {
 public:
  Polytope() = default;

  /// Validates boundedness and nonemptiness (support-function finiteness
  /// in the +/- axis directions, Chebyshev radius >= 0).
  Polytope(Eigen::MatrixXd H, Eigen::VectorXd h);

  /// Axis-aligned box {|x_i| <= r}.
  static Polytope inf_ball(int dim, double radius);
  /// Box with per-axis bounds lo <= x <= hi.
  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);

  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::VectorXd& h() const { return h_; }
  int dim() const { return static_cast<int>(H_.cols()); }
  int num_rows() const { return static_cast<int>(H_.rows()); }

  /// max_{x in P} d'x via LP. Throws InfeasibleSet / Unbounded.
  double support(const Eigen::VectorXd& d) const;

  /// Point attaining the support value.
  Eigen::VectorXd support_point(const Eigen::VectorXd& d) const;

  /// True iff H x <= h + tol componentwise.
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  /// Largest inscribed 2-norm ball; rows of H need not be normalized.
  std::pair<Eigen::VectorXd, double> chebyshev_ball() const;

  /// All extreme points, deduplicated at tolerance tol (inf-norm).
  /// Enumeration is an active-set adjacency walk; requires dim <= 8.
  const std::vector<Eigen::VectorXd>& vertices(double tol = 1e-7) const;
  bool has_vertices() const { return !verts_.empty(); }

  /// Number of vertices where more than dim facets were active.
  int degenerate_vertex_count() const { return degenerate_; }

  /// Same set in normalized form h = 1. Requires the origin strictly
  /// inside (all h_i > 0).
  Polytope normalized() const;

  /// Rows whose removal does not change the set (slack > 1e-9 when
  /// maximized over the remaining rows) are dropped.
  Polytope pruned(double tol = 1e-9) const;

 private:
  Eigen::MatrixXd H_;
  Eigen::VectorXd h_;
  mutable std::vector<Eigen::VectorXd> verts_;
  mutable int degenerate_ = 0;
};

/// Brute-force vertex enumeration over all facet d-subsets. Exponential;
/// test oracle for the adjacency walk.
std::vector<Eigen::VectorXd> enumerate_vertices_brute_force(const Eigen::MatrixXd& H,
                                                            const Eigen::VectorXd& h,
                                                            double tol = 1e-7);

}  // namespace dampc
