#include "bpomdp/dist.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bpomdp {

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

std::string Rational::str() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

Dist::Dist(std::vector<double> probs) : p(std::move(probs)) { validate(); }

Dist Dist::uniform(int n) {
  if (n <= 0) throw std::invalid_argument("uniform distribution needs n >= 1");
  return Dist(std::vector<double>(static_cast<size_t>(n), 1.0 / n));
}

Dist Dist::point(int n, int at) {
  if (at < 0 || at >= n) throw std::invalid_argument("point mass index out of range");
  std::vector<double> v(static_cast<size_t>(n), 0.0);
  v[static_cast<size_t>(at)] = 1.0;
  return Dist(v);
}

std::vector<int> Dist::support() const {
  std::vector<int> s;
  for (int i = 0; i < size(); ++i)
    if (p[static_cast<size_t>(i)] > 0.0) s.push_back(i);
  return s;
}

void Dist::validate() const {
  if (p.empty()) throw std::invalid_argument("empty distribution");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("negative or NaN probability entry");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("distribution sums to " + std::to_string(sum) +
                                ", expected 1 within 1e-12");
}

double parse_probability(const std::string& text) {
  auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      std::int64_t num = std::stoll(text.substr(0, slash));
      std::int64_t den = std::stoll(text.substr(slash + 1));
      if (den <= 0 || num < 0) throw std::invalid_argument("bad fraction");
      return static_cast<double>(num) / static_cast<double>(den);
    }
    size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse probability '" + text + "'");
  }
}

}  // namespace bpomdp
