#pragma once

// Numerical integration primitives shared by every module: an adaptive
// Gauss-Kronrod (7/15) driver that works for real, complex and small
// fixed-size Eigen vector integrands, and cached Gauss-Legendre rules.

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nwbec/errors.hpp"

namespace nwbec::quad {

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& v) {
  return v.template lpNorm<Eigen::Infinity>();
}

template <class T>
T zero() {
  if constexpr (std::is_arithmetic_v<T> ||
                std::is_same_v<T, std::complex<double>>) {
    return T{};
  } else {
    return T::Zero();
  }
}

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int max_intervals = 4000;
};

template <class T>
struct Result {
  T value;
  double error = 0.0;
  int intervals = 0;
  bool converged = true;
  double worst_a = 0.0;  // interval with the largest remaining error
  double worst_b = 0.0;
};

namespace detail {

// Kronrod 15-point nodes (non-negative half) and weights; every other node
// starting at index 1 is a 7-point Gauss node.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace detail

/// One G7K15 panel on [a, b]; returns the Kronrod value and |K15 - G7|.
template <class T, class F>
std::pair<T, double> gauss_kronrod_15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  T fc = f(c);
  T kron = fc * detail::kWgk[7];
  T gauss = fc * detail::kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * detail::kXgk[j];
    T sum = f(c - dx) + f(c + dx);
    kron += sum * detail::kWgk[j];
    if (j % 2 == 1) gauss += sum * detail::kWg[j / 2];
  }
  kron *= h;
  gauss *= h;
  return {kron, magnitude(T(kron - gauss))};
}

/// Globally adaptive integration over consecutive panels [pts[i], pts[i+1]].
/// Bisects the panel with the largest error estimate until the summed
/// estimate is below max(abs_tol, rel_tol * |I|). Does not throw; check
/// `converged`.
template <class T, class F>
Result<T> integrate(F&& f, std::span<const double> pts, const Options& opt = {}) {
  struct Item {
    double a, b, err;
    T val;
  };
  std::vector<Item> items;
  items.reserve(static_cast<std::size_t>(opt.max_intervals) + pts.size());

  T total = zero<T>();
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] == pts[i]) continue;
    auto [v, e] = gauss_kronrod_15<T>(f, pts[i], pts[i + 1]);
    items.push_back({pts[i], pts[i + 1], e, v});
    total += v;
    total_err += e;
  }
  auto cmp = [&](std::size_t l, std::size_t r) {
    if (items[l].err != items[r].err) return items[l].err < items[r].err;
    return items[l].a > items[r].a;
  };
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::make_heap(order.begin(), order.end(), cmp);

  Result<T> res;
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * magnitude(total)); };
  while (!order.empty() && total_err > target()) {
    if (static_cast<int>(items.size()) >= opt.max_intervals) {
      res.converged = false;
      break;
    }
    std::pop_heap(order.begin(), order.end(), cmp);
    const std::size_t worst = order.back();
    order.pop_back();
    const double a = items[worst].a;
    const double b = items[worst].b;
    const double m = 0.5 * (a + b);
    if (!(m > a && m < b)) {  // interval exhausted at machine precision
      res.converged = false;
      res.worst_a = a;
      res.worst_b = b;
      break;
    }
    auto [vl, el] = gauss_kronrod_15<T>(f, a, m);
    auto [vr, er] = gauss_kronrod_15<T>(f, m, b);
    total += vl + vr - items[worst].val;
    total_err += el + er - items[worst].err;
    items[worst] = {a, m, el, vl};
    items.push_back({m, b, er, vr});
    order.push_back(worst);
    std::push_heap(order.begin(), order.end(), cmp);
    order.push_back(items.size() - 1);
    std::push_heap(order.begin(), order.end(), cmp);
  }

  // Fixed summation order: by left endpoint.
  std::sort(items.begin(), items.end(),
            [](const Item& l, const Item& r) { return l.a < r.a; });
  res.value = zero<T>();
  res.error = 0.0;
  double worst_err = -1.0;
  for (const auto& it : items) {
    res.value += it.val;
    res.error += it.err;
    if (it.err > worst_err) {
      worst_err = it.err;
      if (res.converged) {
        res.worst_a = it.a;
        res.worst_b = it.b;
      }
    }
  }
  res.intervals = static_cast<int>(items.size());
  const double tol = std::max(opt.abs_tol, opt.rel_tol * magnitude(res.value));
  res.converged = res.converged && res.error <= tol * (1.0 + 1e-12);
  return res;
}

template <class T, class F>
Result<T> integrate(F&& f, double a, double b, const Options& opt = {}) {
  const std::array<double, 2> pts{a, b};
  return integrate<T>(std::forward<F>(f), std::span<const double>(pts), opt);
}

/// Formats quadrature diagnostics for a ConvergenceError.
template <class T>
std::string describe(const Result<T>& r) {
  std::ostringstream os;
  os.precision(6);
  os << "intervals=" << r.intervals << " error_estimate=" << r.error
     << " worst_interval=[" << r.worst_a << ", " << r.worst_b << "]";
  return os.str();
}

/// Like integrate(), but throws ConvergenceError naming `what` on failure.
template <class T, class F>
T integrate_checked(F&& f, std::span<const double> pts, const Options& opt,
                    const char* what) {
  auto r = integrate<T>(std::forward<F>(f), pts, opt);
  if (!r.converged) {
    throw ConvergenceError(std::string(what) + ": quadrature did not converge",
                           describe(r));
  }
  return r.value;
}

template <class T, class F>
T integrate_checked(F&& f, double a, double b, const Options& opt, const char* what) {
  const std::array<double, 2> pts{a, b};
  return integrate_checked<T>(std::forward<F>(f), std::span<const double>(pts), opt, what);
}

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached; safe to call concurrently.
const Rule& gauss_legendre(unsigned n);

/// Pairwise (cascade) summation; the result depends only on the input order.
template <class T>
T pairwise_sum(std::span<const T> v) {
  if (v.empty()) return zero<T>();
  if (v.size() <= 8) {
    T s = v[0];
    for (std::size_t i = 1; i < v.size(); ++i) s += v[i];
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum<T>(v.subspan(0, h)) + pairwise_sum<T>(v.subspan(h));
}

}  // namespace nwbec::quad
