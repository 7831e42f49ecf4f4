#include "nwbec/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

namespace nwbec::quad {

const Rule& gauss_legendre(unsigned n) {
  static std::mutex mutex;
  static std::map<unsigned, std::unique_ptr<Rule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    if (n == 0) throw DomainError("gauss_legendre: rule needs at least one node");
    // legendre_p_zeros returns the non-negative roots, ascending.
    const std::vector<double> half = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
    auto rule = std::make_unique<Rule>();
    auto weight = [n](double x) {
      const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), x);
      return 2.0 / ((1.0 - x * x) * dp * dp);
    };
    for (auto it = half.rbegin(); it != half.rend(); ++it) {
      if (*it == 0.0) continue;
      rule->nodes.push_back(-*it);
      rule->weights.push_back(weight(*it));
    }
    for (double x : half) {
      rule->nodes.push_back(x);
      rule->weights.push_back(weight(x));
    }
    slot = std::move(rule);
  }
  return *slot;
}

}  // namespace nwbec::quad
