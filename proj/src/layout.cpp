#include "dampc/layout.hpp"

#include <algorithm>
#include <cmath>

#include "dampc/errors.hpp"

namespace dampc {

double ConstraintBatch::max_violation(const Eigen::VectorXd& g) const {
  double worst = 0.0;
  for (const auto& r : rows) {
    double v = -r.rhs;
    for (auto& [c, w] : r.lhs) v += w * g[c];
    worst = std::max(worst, r.sense == Sense::Eq ? std::abs(v) : v);
  }
  return worst;
}

int DecisionLayout::add_block(const std::string& name, int size, bool nonneg) {
  if (offsets_.count(name)) throw Error("DecisionLayout: duplicate block " + name);
  if (size < 0) throw DimensionMismatch("DecisionLayout: negative block size");
  offsets_[name] = total_;
  sizes_[name] = size;
  total_ += size;
  flags_.resize(total_, nonneg ? 1 : 0);
  return offsets_[name];
}

int DecisionLayout::offset(const std::string& name) const {
  auto it = offsets_.find(name);
  if (it == offsets_.end()) throw Error("DecisionLayout: unknown block " + name);
  return it->second;
}

AffineVec block_vars(const DecisionLayout& layout, const std::string& name) {
  const int off = layout.offset(name);
  const int n = layout.size(name);
  AffineVec v;
  v.reserve(n);
  for (int i = 0; i < n; ++i) v.push_back(AffineExpr::var(off + i));
  return v;
}

}  // namespace dampc
