#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

namespace dampc {

/// Sparse affine function over decision-vector columns:
/// value(g) = constant + sum coeff_c * g[c].
struct AffineExpr {
  double constant = 0.0;
  std::map<int, double> terms;

  AffineExpr() = default;
  explicit AffineExpr(double c) : constant(c) {}
  static AffineExpr var(int col, double coeff = 1.0) {
    AffineExpr e;
    e.terms[col] = coeff;
    return e;
  }

  AffineExpr& operator+=(const AffineExpr& o) {
    constant += o.constant;
    for (auto& [c, v] : o.terms) terms[c] += v;
    return *this;
  }
  AffineExpr& operator-=(const AffineExpr& o) {
    constant -= o.constant;
    for (auto& [c, v] : o.terms) terms[c] -= v;
    return *this;
  }
  AffineExpr& operator*=(double s) {
    constant *= s;
    for (auto& [c, v] : terms) v *= s;
    return *this;
  }
  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

  double eval(const Eigen::VectorXd& g) const {
    double v = constant;
    for (auto& [c, w] : terms) v += w * g[c];
    return v;
  }
};

using AffineVec = std::vector<AffineExpr>;

enum class Sense { Le, Eq };

/// A batch of linear constraint rows over the decision vector. Every row
/// carries a provenance tag naming the construction rule it came from.
struct ConstraintBatch {
  struct Row {
    std::vector<std::pair<int, double>> lhs;
    double rhs = 0.0;
    Sense sense = Sense::Le;
    std::string tag;
  };
  std::vector<Row> rows;

  void add(const AffineExpr& e, Sense s, double rhs, const std::string& tag) {
    Row r;
    r.lhs.reserve(e.terms.size());
    for (auto& [c, v] : e.terms)
      if (v != 0.0) r.lhs.emplace_back(c, v);
    r.rhs = rhs - e.constant;
    r.sense = s;
    r.tag = tag;
    rows.push_back(std::move(r));
  }
  void append(ConstraintBatch&& o) {
    for (auto& r : o.rows) rows.push_back(std::move(r));
  }
  int count_tag(const std::string& tag) const {
    int n = 0;
    for (auto& r : rows)
      if (r.tag == tag) ++n;
    return n;
  }
  /// Largest violation of all rows at a concrete decision vector.
  double max_violation(const Eigen::VectorXd& g) const;
};

/// One product term coeff * g[a] * g[b] added on the LHS of a batch row.
/// Row indices refer to the owning ConstraintBatch.
struct BilinearTerm {
  int row = 0;
  int col_a = 0;  // multiplier-block column
  int col_b = 0;  // input-block column
  double coeff = 0.0;
};

/// Index map of the DAMPC decision vector. Blocks are allocated
/// contiguously; unused blocks have size zero. Nonnegativity flags are
/// collected for the solver.
class DecisionLayout {
 public:
  int add_block(const std::string& name, int size, bool nonneg);
  int offset(const std::string& name) const;
  int size(const std::string& name) const { return sizes_.at(name); }
  bool has(const std::string& name) const { return offsets_.count(name) > 0; }
  int total() const { return total_; }
  const std::vector<char>& nonneg_flags() const { return flags_; }

  // named helpers for per-stage blocks
  static std::string key(const std::string& base, int l) { return base + "[" + std::to_string(l) + "]"; }
  static std::string key(const std::string& base, int l, int j) {
    return base + "[" + std::to_string(l) + "," + std::to_string(j) + "]";
  }

 private:
  std::map<std::string, int> offsets_;
  std::map<std::string, int> sizes_;
  std::vector<char> flags_;
  int total_ = 0;
};

/// Vector of affine expressions referring to a contiguous block.
AffineVec block_vars(const DecisionLayout& layout, const std::string& name);

}  // namespace dampc
