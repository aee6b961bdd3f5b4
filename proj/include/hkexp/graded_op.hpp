#pragma once

#include <map>
#include <ostream>

#include <json.hpp>

#include "hkexp/diff_op.hpp"

namespace hkexp {

/// Operator written as sum_g hbar^g D_g with hbar-free differential operators D_g.
class HGradedOp {
 public:
  using Grades = std::map<int, DiffOp>;

  HGradedOp() = default;
  explicit HGradedOp(int dim) : dim_(dim) { check_dim(dim); }

  static HGradedOp single(int grade, const DiffOp& op) {
    HGradedOp out(op.dim());
    out.add(grade, op);
    return out;
  }

  int dim() const { return dim_; }
  const Grades& grades() const { return grades_; }
  bool is_zero() const { return grades_.empty(); }

  DiffOp grade(int g) const {
    auto it = grades_.find(g);
    return it == grades_.end() ? DiffOp(dim_) : it->second;
  }

  void add(int g, const DiffOp& op) {
    require_same_dim(dim_, op.dim(), "HGradedOp::add");
    if (op.is_zero()) return;
    auto [it, inserted] = grades_.emplace(g, op);
    if (!inserted) {
      it->second += op;
      if (it->second.is_zero()) grades_.erase(it);
    }
  }

  HGradedOp& operator+=(const HGradedOp& o) {
    require_same_dim(dim_, o.dim_, "HGradedOp +");
    for (const auto& [g, op] : o.grades_) add(g, op);
    return *this;
  }
  HGradedOp& operator-=(const HGradedOp& o) {
    require_same_dim(dim_, o.dim_, "HGradedOp -");
    for (const auto& [g, op] : o.grades_) add(g, -op);
    return *this;
  }
  HGradedOp& operator*=(const Rational& k) {
    if (k == 0) {
      grades_.clear();
      return *this;
    }
    for (auto& [g, op] : grades_) op *= k;
    return *this;
  }
  friend HGradedOp operator+(HGradedOp a, const HGradedOp& b) { return a += b; }
  friend HGradedOp operator-(HGradedOp a, const HGradedOp& b) { return a -= b; }
  friend HGradedOp operator*(HGradedOp a, const Rational& k) { return a *= k; }
  friend HGradedOp operator*(const Rational& k, HGradedOp a) { return a *= k; }

  /// Multiplication by hbar^k.
  HGradedOp shifted(int k) const {
    HGradedOp out(dim_);
    for (const auto& [g, op] : grades_) out.grades_.emplace(g + k, op);
    return out;
  }

  bool operator==(const HGradedOp& o) const { return dim_ == o.dim_ && grades_ == o.grades_; }

 private:
  Grades grades_;
  int dim_ = 1;
};

inline HGradedOp operator*(const HGradedOp& a, const HGradedOp& b) {
  require_same_dim(a.dim(), b.dim(), "HGradedOp o");
  HGradedOp out(a.dim());
  for (const auto& [ga, oa] : a.grades())
    for (const auto& [gb, ob] : b.grades()) out.add(ga + gb, op_compose(oa, ob));
  return out;
}

inline HGradedOp graded_commutator(const HGradedOp& a, const HGradedOp& b) { return a * b - b * a; }

inline std::ostream& operator<<(std::ostream& os, const HGradedOp& x) {
  if (x.is_zero()) return os << "0";
  bool first = true;
  for (const auto& [g, op] : x.grades()) {
    os << (first ? "" : "\n") << "hbar^" << g << " : " << op;
    first = false;
  }
  return os;
}

inline nlohmann::json to_json(const HGradedOp& x) {
  nlohmann::json out;
  out["dim"] = x.dim();
  out["grades"] = nlohmann::json::array();
  for (const auto& [g, op] : x.grades()) out["grades"].push_back({{"hbar_exp", g}, {"op", to_json(op)}});
  return out;
}

inline HGradedOp graded_op_from_json(const nlohmann::json& j) {
  int dim = j.at("dim").get<int>();
  HGradedOp x(dim);
  for (const auto& g : j.at("grades")) x.add(g.at("hbar_exp").get<int>(), diff_op_from_json(g.at("op")));
  return x;
}

}  // namespace hkexp
