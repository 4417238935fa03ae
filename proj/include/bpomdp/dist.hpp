#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bpomdp {

// Reduced fraction used wherever results are exact by construction
// (uniform-prior success counts, rational prior entries).
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  std::string str() const;
};

// Finite probability vector over {0,...,size-1}. Zero entries are allowed;
// the support is the set of indices with positive mass.
struct Dist {
  std::vector<double> p;

  Dist() = default;
  explicit Dist(std::vector<double> probs);
  static Dist uniform(int n);
  static Dist point(int n, int at);

  int size() const { return static_cast<int>(p.size()); }
  double at(int i) const { return p[static_cast<size_t>(i)]; }
  std::vector<int> support() const;

  // Throws std::invalid_argument unless entries are nonnegative and sum to 1
  // within 1e-12.
  void validate() const;
};

// Parses "3/16" or a plain decimal into a probability entry.
double parse_probability(const std::string& text);

}  // namespace bpomdp
