#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "oai/common.hpp"
#include "oai/ensemble.hpp"

namespace oai {

enum class Cohort { AiModel, TechExpert, MgmtExpert };

inline const char* cohort_name(Cohort c) {
  switch (c) {
    case Cohort::AiModel: return "ai";
    case Cohort::TechExpert: return "tech";
    case Cohort::MgmtExpert: return "mgmt";
  }
  return "ai";
}

inline Cohort parse_cohort(const std::string& name) {
  if (name == "ai") return Cohort::AiModel;
  if (name == "tech") return Cohort::TechExpert;
  if (name == "mgmt") return Cohort::MgmtExpert;
  throw ValidationError("unknown cohort \"" + name + "\" (expected ai|tech|mgmt)");
}

// One evaluator's rating of one DWA.
struct RatingObservation {
  std::string dwa_id;
  std::string evaluator_id;
  Cohort cohort = Cohort::AiModel;
  int risk_rating = 1;                  // 1..5
  std::optional<int> tech_rating;       // 0..3
  std::optional<Stratum> stratum;
};

struct TestResult {
  double statistic = 0;
  double p_value = 1;
  int n_effective = 0;
  std::string method;  // "exact" or "approximate"
};

// --- Distribution helpers ----------------------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

// Regularized incomplete beta I_x(a,b) via Lentz continued fraction.
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double ibeta_reg(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log(1.0 - x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p for a t statistic: 2*P(T > |t|) = I_{v/(v+t^2)}(v/2, 1/2).
inline double student_t_two_sided_p(double t, double dof) {
  if (dof <= 0) return 1.0;
  return detail::ibeta_reg(dof / 2.0, 0.5, dof / (dof + t * t));
}

// Average (fractional) ranks, 1-based; ties share the mean of their ranks.
inline std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw ComputeError("spearman: constant input, correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

// Two-sided permutation p over all n! pairings of the rank vectors.
inline double spearman_exact_p(const std::vector<double>& rx, const std::vector<double>& ry, double rho_obs) {
  const std::size_t n = rx.size();
  double mx = 0;
  for (double r : rx) mx += r;
  mx /= static_cast<double>(n);
  double sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - mx) * (ry[i] - mx);  // rank vectors share the mean
  }
  const double denom = std::sqrt(sxx * syy);
  std::vector<double> perm = ry;
  std::sort(perm.begin(), perm.end());
  std::uint64_t total = 0, extreme = 0;
  const double threshold = std::fabs(rho_obs) - 1e-12;
  do {
    double sxy = 0;
    for (std::size_t i = 0; i < n; ++i) sxy += (rx[i] - mx) * (perm[i] - mx);
    if (std::fabs(sxy / denom) >= threshold) ++extreme;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  // next_permutation over a multiset enumerates distinct orderings; each has
  // equal multiplicity under the uniform permutation null, so the ratio is exact.
  return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace detail

// Spearman rank correlation with average ranks for ties. p-value is an exact
// permutation enumeration for n <= 10 and a t approximation (n-2 dof) above;
// the switch point is part of the contract, not tunable.
inline TestResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ComputeError("spearman: length mismatch");
  if (x.size() < 3) throw ComputeError("spearman: need at least 3 observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  TestResult res;
  res.n_effective = static_cast<int>(x.size());
  res.statistic = detail::pearson(rx, ry);
  const std::size_t n = x.size();
  if (n <= 10) {
    res.method = "exact";
    res.p_value = detail::spearman_exact_p(rx, ry, res.statistic);
  } else {
    res.method = "approximate";
    const double rho = std::clamp(res.statistic, -1.0, 1.0);
    if (std::fabs(rho) >= 1.0) {
      res.p_value = 0.0;
    } else {
      const double dof = static_cast<double>(n) - 2.0;
      const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
      res.p_value = student_t_two_sided_p(t, dof);
    }
  }
  return res;
}

namespace detail {

// Exact null distribution of W+ by dynamic programming over doubled ranks
// (average ranks of tied |d| are half-integers, so doubling keeps them integral).
inline double wilcoxon_exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
  const std::size_t n = ranks.size();
  std::int64_t total2 = 0;
  std::vector<std::int64_t> doubled(n);
  for (std::size_t i = 0; i < n; ++i) {
    doubled[i] = static_cast<std::int64_t>(std::llround(ranks[i] * 2.0));
    total2 += doubled[i];
  }
  std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
  count[0] = 1.0;
  std::int64_t reach = 0;
  for (std::size_t i = 0; i < n; ++i) {
    reach += doubled[i];
    for (std::int64_t s = reach; s >= doubled[i]; --s)
      count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - doubled[i])];
  }
  const double denom = std::ldexp(1.0, static_cast<int>(n));  // 2^n
  const auto w2 = static_cast<std::int64_t>(std::llround(w_plus * 2.0));
  double le = 0, ge = 0;
  for (std::int64_t s = 0; s <= total2; ++s) {
    if (s <= w2) le += count[static_cast<std::size_t>(s)];
    if (s >= w2) ge += count[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / denom);
}

}  // namespace detail

// Wilcoxon signed-rank test. Zero differences are dropped; |d| ties receive
// average ranks; the statistic is W+ (sum of positive-difference ranks).
// Exact two-sided p by full sign enumeration for n_effective <= 20, else a
// normal approximation with tie correction and 0.5 continuity correction.
inline TestResult wilcoxon_signed_rank(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> diffs;
  for (const auto& [a, b] : pairs) {
    const double d = a - b;
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw ComputeError("wilcoxon: all differences are zero");
  const std::size_t n = diffs.size();
  std::vector<double> abs_diffs(n);
  for (std::size_t i = 0; i < n; ++i) abs_diffs[i] = std::fabs(diffs[i]);
  const auto ranks = average_ranks(abs_diffs);
  double w_plus = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (diffs[i] > 0) w_plus += ranks[i];

  TestResult res;
  res.statistic = w_plus;
  res.n_effective = static_cast<int>(n);
  if (n <= 20) {
    res.method = "exact";
    res.p_value = detail::wilcoxon_exact_two_sided_p(ranks, w_plus);
  } else {
    res.method = "approximate";
    const double nd = static_cast<double>(n);
    const double mu = nd * (nd + 1.0) / 4.0;
    double sigma_sq = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t)/48 over tie groups of |d|.
    std::vector<double> sorted = abs_diffs;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      sigma_sq -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
    if (sigma_sq <= 0) {
      res.p_value = 1.0;  // all |d| identical and n tiny; degenerate
    } else {
      double num = w_plus - mu;
      if (num > 0.5) num -= 0.5;
      else if (num < -0.5) num += 0.5;
      else num = 0.0;
      const double z = num / std::sqrt(sigma_sq);
      res.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(z))));
    }
  }
  return res;
}

// --- Proportional-odds (ordered logit) model ---------------------------------

struct OrderedLogitFit {
  double beta = 0;                  // evaluator-identity coefficient
  std::vector<double> thresholds;   // strictly increasing cutpoints
  double std_err_beta = 0;
  double z = 0;
  double p_value = 1;               // two-sided Wald
  double log_likelihood = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> ll_trace;     // log-likelihood after each accepted step
  std::vector<std::string> warnings;
};

namespace detail {

inline double logistic(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct OlmWork {
  std::vector<int> y;  // 1..K, contiguous
  std::vector<int> x;  // 0/1
  int k = 0;           // number of categories
};

// Log-likelihood with analytic gradient and Hessian in the natural
// parameterization q = (beta, theta_1..theta_{K-1}).
inline double olm_loglik(const OlmWork& w, const std::vector<double>& q,
                         std::vector<double>* grad, std::vector<std::vector<double>>* hess) {
  const int kp = w.k;  // parameters: beta + (kp-1) thresholds
  const int np = kp;
  const double beta = q[0];
  if (grad) grad->assign(static_cast<std::size_t>(np), 0.0);
  if (hess) hess->assign(static_cast<std::size_t>(np), std::vector<double>(static_cast<std::size_t>(np), 0.0));
  double ll = 0;
  constexpr double kTiny = 1e-300;
  for (std::size_t i = 0; i < w.y.size(); ++i) {
    const int c = w.y[i];
    const double xb = beta * w.x[i];
    const bool has_upper = c < kp;
    const bool has_lower = c > 1;
    const double a = has_upper ? q[static_cast<std::size_t>(c)] - xb : 0.0;
    const double b = has_lower ? q[static_cast<std::size_t>(c - 1)] - xb : 0.0;
    const double fa = has_upper ? logistic(a) : 1.0;
    const double fb = has_lower ? logistic(b) : 0.0;
    double p = fa - fb;
    if (p < kTiny) p = kTiny;
    ll += std::log(p);
    if (!grad && !hess) continue;
    const double da = has_upper ? fa * (1.0 - fa) : 0.0;           // logistic pdf at a
    const double db = has_lower ? fb * (1.0 - fb) : 0.0;
    const double u = da / p;                                       // dl/da
    const double v = -db / p;                                      // dl/db
    const double dpa = has_upper ? da * (1.0 - 2.0 * fa) : 0.0;    // pdf' at a
    const double dpb = has_lower ? db * (1.0 - 2.0 * fb) : 0.0;
    const double l_aa = dpa / p - u * u;
    const double l_bb = -dpb / p - v * v;
    const double l_ab = da * db / (p * p);
    const double xi = static_cast<double>(w.x[i]);
    const int ia = has_upper ? c : -1;      // q index of theta_c
    const int ib = has_lower ? c - 1 : -1;  // q index of theta_{c-1}
    if (grad) {
      (*grad)[0] += -xi * (u + v);
      if (ia >= 0) (*grad)[static_cast<std::size_t>(ia)] += u;
      if (ib >= 0) (*grad)[static_cast<std::size_t>(ib)] += v;
    }
    if (hess) {
      auto& h = *hess;
      h[0][0] += xi * xi * (l_aa + 2.0 * l_ab + l_bb);
      if (ia >= 0) {
        h[static_cast<std::size_t>(ia)][static_cast<std::size_t>(ia)] += l_aa;
        h[0][static_cast<std::size_t>(ia)] += -xi * (l_aa + l_ab);
        h[static_cast<std::size_t>(ia)][0] += -xi * (l_aa + l_ab);
      }
      if (ib >= 0) {
        h[static_cast<std::size_t>(ib)][static_cast<std::size_t>(ib)] += l_bb;
        h[0][static_cast<std::size_t>(ib)] += -xi * (l_ab + l_bb);
        h[static_cast<std::size_t>(ib)][0] += -xi * (l_ab + l_bb);
      }
      if (ia >= 0 && ib >= 0) {
        h[static_cast<std::size_t>(ia)][static_cast<std::size_t>(ib)] += l_ab;
        h[static_cast<std::size_t>(ib)][static_cast<std::size_t>(ia)] += l_ab;
      }
    }
  }
  return ll;
}

// Gaussian elimination solve; returns false when the system is singular.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                         std::vector<double>& out) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (std::fabs(a[pivot][col]) < 1e-12) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = b[i] / a[i][i];
  return true;
}

inline bool invert_matrix(const std::vector<std::vector<double>>& m, std::vector<std::vector<double>>& inv) {
  const std::size_t n = m.size();
  inv.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<double> e(n, 0.0);
    e[col] = 1.0;
    std::vector<double> x;
    if (!solve_linear(m, e, x)) return false;
    for (std::size_t r = 0; r < n; ++r) inv[r][col] = x[r];
  }
  return true;
}

// Natural q = (beta, thetas) from the unconstrained optimization vector
// p = (beta, theta_1, delta_1..delta_{K-2}) with theta_{k+1} = theta_k + exp(delta_k).
inline std::vector<double> olm_natural(const std::vector<double>& p) {
  std::vector<double> q(p.size());
  q[0] = p[0];
  if (p.size() > 1) q[1] = p[1];
  for (std::size_t j = 2; j < p.size(); ++j) q[j] = q[j - 1] + std::exp(p[j]);
  return q;
}

}  // namespace detail

// Public evaluation hooks in the natural parameterization, used both by the
// fitter and by gradient verification against finite differences.
inline double ordered_logit_loglik(const std::vector<std::pair<int, int>>& obs, double beta,
                                   const std::vector<double>& thresholds) {
  detail::OlmWork w;
  w.k = static_cast<int>(thresholds.size()) + 1;
  for (const auto& [y, x] : obs) {
    w.y.push_back(y);
    w.x.push_back(x);
  }
  std::vector<double> q;
  q.push_back(beta);
  q.insert(q.end(), thresholds.begin(), thresholds.end());
  return detail::olm_loglik(w, q, nullptr, nullptr);
}

inline std::vector<double> ordered_logit_gradient(const std::vector<std::pair<int, int>>& obs, double beta,
                                                  const std::vector<double>& thresholds) {
  detail::OlmWork w;
  w.k = static_cast<int>(thresholds.size()) + 1;
  for (const auto& [y, x] : obs) {
    w.y.push_back(y);
    w.x.push_back(x);
  }
  std::vector<double> q;
  q.push_back(beta);
  q.insert(q.end(), thresholds.begin(), thresholds.end());
  std::vector<double> grad;
  detail::olm_loglik(w, q, &grad, nullptr);
  return grad;
}

// MLE of P(y <= k | x) = logistic(theta_k - beta*x) by damped Newton iteration
// on the reparameterization theta_1 free, theta_{k+1} = theta_k + exp(delta_k)
// (which enforces strict threshold ordering). Converges when the gradient
// max-norm drops below 1e-8, capped at 100 iterations. Standard errors come
// from the observed information at the optimum.
inline OrderedLogitFit ordered_logit_fit(const std::vector<std::pair<int, int>>& obs) {
  OrderedLogitFit fit;
  if (obs.empty()) throw ComputeError("ordered_logit: no observations");
  bool has_x0 = false, has_x1 = false;
  std::map<int, int> category_counts;
  for (const auto& [y, x] : obs) {
    if (x == 0) has_x0 = true;
    else if (x == 1) has_x1 = true;
    else throw ComputeError("ordered_logit: x must be 0 or 1");
    category_counts[y]++;
  }
  if (!has_x0 || !has_x1) throw ComputeError("ordered_logit: both x groups must be present");
  if (category_counts.size() < 2) throw ComputeError("ordered_logit: need at least 2 outcome categories");

  // Collapse unobserved categories onto a contiguous 1..K scale.
  std::map<int, int> remap;
  int next = 1;
  for (const auto& [cat, cnt] : category_counts) remap[cat] = next++;
  const int k = static_cast<int>(remap.size());
  bool collapsed = false;
  for (auto it = category_counts.begin(); std::next(it) != category_counts.end(); ++it)
    if (std::next(it)->first != it->first + 1) collapsed = true;
  if (collapsed)
    fit.warnings.push_back("unobserved intermediate categories collapsed onto a contiguous scale");

  detail::OlmWork w;
  w.k = k;
  for (const auto& [y, x] : obs) {
    w.y.push_back(remap.at(y));
    w.x.push_back(x);
  }

  // Start from the empirical cumulative logits at beta = 0.
  std::vector<double> p(static_cast<std::size_t>(k), 0.0);
  {
    std::vector<double> cum(static_cast<std::size_t>(k - 1), 0.0);
    double running = 0;
    const double total = static_cast<double>(w.y.size());
    std::vector<int> counts(static_cast<std::size_t>(k) + 1, 0);
    for (int y : w.y) counts[static_cast<std::size_t>(y)]++;
    for (int c = 1; c < k; ++c) {
      running += counts[static_cast<std::size_t>(c)];
      double frac = std::clamp(running / total, 1e-4, 1.0 - 1e-4);
      cum[static_cast<std::size_t>(c - 1)] = std::log(frac / (1.0 - frac));
    }
    p[1] = cum[0];
    for (int c = 2; c < k; ++c) {
      double gap = cum[static_cast<std::size_t>(c - 1)] - cum[static_cast<std::size_t>(c - 2)];
      p[static_cast<std::size_t>(c)] = std::log(std::max(gap, 1e-4));
    }
  }

  const int np = k;
  constexpr double kGradTol = 1e-8;
  constexpr int kMaxIter = 100;
  std::vector<double> q = detail::olm_natural(p);
  std::vector<double> grad_q;
  std::vector<std::vector<double>> hess_q;
  double ll = detail::olm_loglik(w, q, &grad_q, &hess_q);
  fit.ll_trace.push_back(ll);

  auto chain_to_p = [&](const std::vector<double>& gq, const std::vector<std::vector<double>>& hq,
                        const std::vector<double>& pv, std::vector<double>& gp,
                        std::vector<std::vector<double>>& hp) {
    // J[i][j] = dq_i/dp_j; q0=p0, theta_c rows depend on p1 and exp(delta_j), j+1 <= c.
    std::vector<std::vector<double>> jac(static_cast<std::size_t>(np),
                                         std::vector<double>(static_cast<std::size_t>(np), 0.0));
    jac[0][0] = 1.0;
    for (int c = 1; c < np; ++c) {
      jac[static_cast<std::size_t>(c)][1] = 1.0;
      for (int j = 2; j <= c; ++j)
        jac[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = std::exp(pv[static_cast<std::size_t>(j)]);
    }
    gp.assign(static_cast<std::size_t>(np), 0.0);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        gp[static_cast<std::size_t>(j)] += gq[static_cast<std::size_t>(i)] * jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    hp.assign(static_cast<std::size_t>(np), std::vector<double>(static_cast<std::size_t>(np), 0.0));
    for (int a = 0; a < np; ++a)
      for (int b = 0; b < np; ++b) {
        double acc = 0;
        for (int i = 0; i < np; ++i)
          for (int j = 0; j < np; ++j)
            acc += jac[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] *
                   hq[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                   jac[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
        hp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = acc;
      }
    // Second-derivative terms: d2 theta_c / d delta_j^2 = exp(delta_j) for j <= c.
    for (int j = 2; j < np; ++j) {
      double sum_g = 0;
      for (int c = j; c < np; ++c) sum_g += gq[static_cast<std::size_t>(c)];
      hp[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] += sum_g * std::exp(pv[static_cast<std::size_t>(j)]);
    }
  };

  int iter = 0;
  bool singular = false;
  for (; iter < kMaxIter; ++iter) {
    std::vector<double> gp;
    std::vector<std::vector<double>> hp;
    chain_to_p(grad_q, hess_q, p, gp, hp);
    double gmax = 0;
    for (double g : gp) gmax = std::max(gmax, std::fabs(g));
    if (gmax < kGradTol) {
      fit.converged = true;
      break;
    }
    // Newton direction: solve (-H) step = grad.
    std::vector<std::vector<double>> neg_h = hp;
    for (auto& row : neg_h)
      for (double& v : row) v = -v;
    std::vector<double> step;
    if (!detail::solve_linear(neg_h, gp, step)) {
      singular = true;
      break;
    }
    // Damping: halve until the log-likelihood does not decrease. The slack is
    // relative to |ll| because near the optimum the true improvement of a full
    // Newton step drops below the floating-point noise of the ll sum itself.
    const double noise_tol = 1e-10 * (1.0 + std::fabs(ll));
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      std::vector<double> p_new = p;
      for (int i = 0; i < np; ++i) p_new[static_cast<std::size_t>(i)] += scale * step[static_cast<std::size_t>(i)];
      std::vector<double> q_new = detail::olm_natural(p_new);
      std::vector<double> g_new;
      std::vector<std::vector<double>> h_new;
      const double ll_new = detail::olm_loglik(w, q_new, &g_new, &h_new);
      if (std::isfinite(ll_new) && ll_new >= ll - noise_tol) {
        p = std::move(p_new);
        q = std::move(q_new);
        grad_q = std::move(g_new);
        hess_q = std::move(h_new);
        ll = ll_new;
        accepted = true;
        break;
      }
      scale /= 2.0;
    }
    if (!accepted) break;
    fit.ll_trace.push_back(ll);
  }
  fit.iterations = iter;
  fit.log_likelihood = ll;
  fit.beta = q[0];
  fit.thresholds.assign(q.begin() + 1, q.end());

  // Unbounded likelihood (complete separation) shows up as a runaway beta or
  // a singular information matrix; report non-convergence rather than a fit.
  if (singular || std::fabs(fit.beta) > 30.0) fit.converged = false;

  if (fit.converged) {
    std::vector<std::vector<double>> info = hess_q;  // observed information = -H
    for (auto& row : info)
      for (double& v : row) v = -v;
    std::vector<std::vector<double>> cov;
    if (detail::invert_matrix(info, cov) && cov[0][0] > 0) {
      fit.std_err_beta = std::sqrt(cov[0][0]);
      fit.z = fit.beta / fit.std_err_beta;
      fit.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::fabs(fit.z))));
    } else {
      fit.converged = false;
      fit.warnings.push_back("observed information matrix not invertible");
    }
  }
  return fit;
}

// --- Stratum-by-cohort cell means (table2.csv) ---------------------------------

struct CellStat {
  int count = 0;
  double mean_risk = 0;
};

// Grid[stratum][cohort]; cells with no observations stay absent, never zero.
using CellGrid = std::array<std::array<std::optional<CellStat>, 3>, 3>;

inline CellGrid cell_means(const std::vector<RatingObservation>& obs) {
  CellGrid grid;
  std::array<std::array<std::pair<std::int64_t, int>, 3>, 3> acc{};  // (sum, count)
  for (const auto& o : obs) {
    if (!o.stratum) throw ComputeError("cell_means: observation for \"" + o.dwa_id + "\" lacks a stratum");
    const auto s = static_cast<std::size_t>(*o.stratum);
    const auto c = static_cast<std::size_t>(o.cohort);
    acc[s][c].first += o.risk_rating;
    acc[s][c].second += 1;
  }
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t c = 0; c < 3; ++c)
      if (acc[s][c].second > 0)
        grid[s][c] = CellStat{acc[s][c].second,
                              static_cast<double>(acc[s][c].first) / acc[s][c].second};
  return grid;
}

// Cell means plus the per-stratum distinct-DWA counts (the N column).
struct HitlSummary {
  CellGrid grid;
  std::array<int, 3> dwa_counts{0, 0, 0};
};

inline HitlSummary summarize_hitl(const std::vector<RatingObservation>& obs) {
  HitlSummary s;
  s.grid = cell_means(obs);
  std::array<std::set<std::string>, 3> dwas;
  for (const auto& o : obs) dwas[static_cast<std::size_t>(*o.stratum)].insert(o.dwa_id);
  for (std::size_t i = 0; i < 3; ++i) s.dwa_counts[i] = static_cast<int>(dwas[i].size());
  return s;
}

}  // namespace oai
