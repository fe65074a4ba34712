#pragma once

// Two-sample similarity testing of categorical count vectors.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "biasrate/core.hpp"

namespace biasrate {

inline constexpr double kDefaultAlpha = 0.05;

struct SimilarityVerdict {
  bool similar = false;
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
  double alpha = kDefaultAlpha;
  std::vector<std::string> dropped_categories;

  friend bool operator==(const SimilarityVerdict&, const SimilarityVerdict&) = default;
};

inline void to_json(json& j, const SimilarityVerdict& v) {
  j = json{{"similar", v.similar},
           {"statistic", v.statistic},
           {"degrees_of_freedom", v.degrees_of_freedom},
           {"p_value", v.p_value},
           {"alpha", v.alpha},
           {"dropped_categories", v.dropped_categories}};
}

inline SimilarityVerdict verdict_from_json(const json& j) {
  SimilarityVerdict v;
  v.similar = j.at("similar");
  v.statistic = j.at("statistic");
  v.degrees_of_freedom = j.at("degrees_of_freedom");
  v.p_value = j.at("p_value");
  v.alpha = j.at("alpha");
  v.dropped_categories = j.at("dropped_categories").get<std::vector<std::string>>();
  return v;
}

// ---------------------------------------------------------------------------
// Incomplete gamma function
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr int kGammaMaxIterations = 10000;
inline constexpr double kGammaEpsilon = 1e-16;

// Lower regularized gamma P(a,x) by its power series; converges fast for x < a+1.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kGammaMaxIterations; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEpsilon) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a,x) by modified Lentz evaluation of its
// continued fraction; converges fast for x >= a+1.
inline double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / kGammaEpsilon;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kGammaEpsilon) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline void check_gamma_domain(double a, double x) {
  if (!(a > 0.0) || !std::isfinite(a)) throw InputError("incomplete gamma requires a > 0");
  if (!(x >= 0.0) || std::isnan(x)) throw InputError("incomplete gamma requires x >= 0");
}

}  // namespace detail

/// Upper regularized incomplete gamma Q(a, x).
inline double regularized_gamma_q(double a, double x) {
  detail::check_gamma_domain(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::clamp(1.0 - detail::gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(detail::gamma_q_continued_fraction(a, x), 0.0, 1.0);
}

/// Lower regularized incomplete gamma P(a, x) = 1 - Q(a, x).
inline double regularized_gamma_p(double a, double x) {
  detail::check_gamma_domain(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return std::clamp(detail::gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(1.0 - detail::gamma_q_continued_fraction(a, x), 0.0, 1.0);
}

/// Upper tail of the chi-squared distribution with `df` degrees of freedom.
inline double p_value(double statistic, int df) {
  if (df < 1) throw InputError("p_value requires at least one degree of freedom");
  if (!(statistic >= 0.0)) throw InputError("chi-squared statistic must be non-negative");
  return regularized_gamma_q(df / 2.0, statistic / 2.0);
}

// ---------------------------------------------------------------------------
// Two-sample chi-squared
// ---------------------------------------------------------------------------

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  std::vector<std::string> dropped;
};

/// Chi-squared statistic for the hypothesis that two count vectors come from
/// the same distribution. Totals may differ:
///
///   sum_i (sqrt(N2/N1) * a_i - sqrt(N1/N2) * b_i)^2 / (a_i + b_i)
///
/// Categories empty in both vectors are dropped and reported.
inline ChiSquareResult chi_square_statistic(const ValueCounts& first, const ValueCounts& second) {
  if (!(first.attribute() == second.attribute()))
    throw InputError("cannot compare counts over different attributes ('" +
                     first.attribute().name() + "' vs '" + second.attribute().name() + "')");
  const auto n1 = static_cast<double>(first.total());
  const auto n2 = static_cast<double>(second.total());
  if (n1 == 0.0 || n2 == 0.0) throw InputError("chi-squared test needs nonzero totals");

  const double w1 = std::sqrt(n2 / n1);
  const double w2 = std::sqrt(n1 / n2);
  ChiSquareResult result;
  int retained = 0;
  for (std::size_t i = 0; i < first.counts().size(); ++i) {
    const auto a = static_cast<double>(first[i]);
    const auto b = static_cast<double>(second[i]);
    if (a + b == 0.0) {
      result.dropped.push_back(first.attribute().values()[i]);
      continue;
    }
    ++retained;
    const double diff = w1 * a - w2 * b;
    result.statistic += diff * diff / (a + b);
  }
  if (retained == 0) throw InputError("every category is empty in both samples");
  result.degrees_of_freedom = retained - 1;
  return result;
}

/// Pluggable distribution-similarity test.
class SimilarityTest {
 public:
  virtual ~SimilarityTest() = default;
  virtual std::string name() const = 0;
  virtual SimilarityVerdict compare(const ValueCounts& first, const ValueCounts& second,
                                    double alpha) const = 0;
};

/// Similar iff the p-value strictly exceeds alpha. A single retained category
/// (zero degrees of freedom) means both samples put all mass in the same
/// place and is declared similar with p = 1.
class ChiSquareTest final : public SimilarityTest {
 public:
  std::string name() const override { return "chi_squared"; }

  SimilarityVerdict compare(const ValueCounts& first, const ValueCounts& second,
                            double alpha) const override {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    auto chi = chi_square_statistic(first, second);
    SimilarityVerdict v;
    v.statistic = chi.statistic;
    v.degrees_of_freedom = chi.degrees_of_freedom;
    v.alpha = alpha;
    v.dropped_categories = std::move(chi.dropped);
    if (v.degrees_of_freedom == 0) {
      v.p_value = 1.0;
      v.similar = true;
    } else {
      v.p_value = p_value(v.statistic, v.degrees_of_freedom);
      v.similar = v.p_value > alpha;
    }
    return v;
  }
};

inline SimilarityVerdict similar(const ValueCounts& first, const ValueCounts& second,
                                 double alpha = kDefaultAlpha) {
  return ChiSquareTest{}.compare(first, second, alpha);
}

}  // namespace biasrate
