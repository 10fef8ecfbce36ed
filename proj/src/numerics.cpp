#include "proxnest/numerics.hpp"

#include <algorithm>

namespace proxnest {

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  if (m == kInf) return kInf;
  NeumaierSum s;
  for (double x : v) s.add(std::exp(x - m));
  return m + std::log(s.value());
}

double compensated_sum(std::span<const double> v) {
  NeumaierSum s;
  for (double x : v) s.add(x);
  return s.value();
}

double compensated_squared_norm(std::span<const double> v) {
  NeumaierSum s;
  for (double x : v) s.add(x * x);
  return s.value();
}

}  // namespace proxnest
