#include "liquid/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "liquid/errors.hpp"

namespace liquid {

namespace {

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double choose2(double K) { return (K + 1.0) * K / 2.0; }

}  // namespace

double log_q_pmf(int N, double lT, int l) {
  if (N < 0 || l < 0 || l > N) throw ParameterError("q_pmf: l must lie in [0, N]");
  if (lT < 0) throw ParameterError("q_pmf: lambda T_tot must be nonnegative");
  const double ninf = -std::numeric_limits<double>::infinity();
  // log p = log(1 - e^{-lT}), log(1-p) = -lT
  if (lT == 0.0) return l == 0 ? 0.0 : ninf;
  const double log_p = std::log(-std::expm1(-lT));
  return log_choose(N, l) + l * log_p - (N - l) * lT;
}

double q_pmf(int N, double lT, int l) { return std::exp(log_q_pmf(N, lT, l)); }

double expected_erased(int N, double lT, double x) {
  if (x < 0.0 || x > 1.0) throw ParameterError("expected_erased: x must lie in [0, 1]");
  return -N * std::expm1(-lT * x);
}

MttdlBasic mttdl_lower_bound_basic(int N, int k_c, double lambda, double T_tot) {
  const int r = N - k_c;
  if (r < 0) throw ParameterError("mttdl_lower_bound_basic: need k_c <= N");
  const double lT = lambda * T_tot;
  const double log_qr = log_q_pmf(N, lT, r);
  MttdlBasic out;
  // Sum of q(0..r) with Kahan compensation.
  double sum = 0.0, comp = 0.0;
  for (int j = 0; j <= r; ++j) {
    const double y = q_pmf(N, lT, j) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  // lambda N (1 - beta) = lambda k_c
  const double log_first = -std::log(lambda * k_c) - log_qr;
  if (k_c == 0 || log_first > std::log(std::numeric_limits<double>::max())) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  out.value = std::exp(log_first) - T_tot / sum;
  out.negative = out.value < 0.0;
  return out;
}

double schedule_kappa(double delta, double lT) {
  if (!(delta >= 0.0 && delta < 1.0)) throw ParameterError("kappa: delta must lie in [0, 1)");
  if (!(lT > 0.0)) throw ParameterError("kappa: lambda T_tot must be positive");
  return 1.0 / ((1.0 - delta) * lT);
}

double gamma_of_z(const ParamSet& p, double Z) {
  return -std::expm1(-p.lambda_T_tot * (1.0 - Z)) / p.xi;
}

double z_of_gamma(const ParamSet& p, double gamma) {
  return 1.0 + std::log1p(-p.xi * gamma) / p.lambda_T_tot;
}

double k_of_gamma(const ParamSet& p, double gamma) {
  return -p.gbar * p.N * std::log1p(-p.xi * gamma);
}

ParamSet derive_parameters(int N, double beta, double delta) {
  if (N < 1) throw ParameterError("derive_parameters: N must be positive");
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("derive_parameters: beta must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("derive_parameters: delta must lie in (0, 1)");
  ParamSet p;
  p.N = N;
  p.beta = beta;
  p.delta = delta;
  p.gbar = 1.0 - delta;
  p.beta_bar = beta - 2.0 * delta;
  const double gN = p.gbar * N;
  p.xi = std::expm1(1.0 / gN) * gN;
  p.gamma_m = p.gbar * p.beta_bar;
  p.gamma_a = p.gbar * p.gamma_m;
  p.gamma_v = p.gbar * p.gamma_a;
  if (!(p.xi * p.gamma_m < 1.0) || p.beta_bar <= 0.0)
    throw ConfigError("derive_parameters: beta - 2 delta must be positive and xi gamma_m below 1");

  p.lambda_T_tot = p.gamma_a + 1.0 / gN - std::log1p(-p.xi * p.gamma_a);
  p.beta_v = -p.gbar * std::log1p(-p.xi * p.gamma_v);
  p.kappa = schedule_kappa(delta, p.lambda_T_tot);
  p.lambda_dt = 1.0 / gN;

  p.Z_v = 1.0 - p.beta_v * p.kappa;
  p.Z_a = p.kappa * (p.gamma_v + 1.0 / N);
  p.Z_m = z_of_gamma(p, p.gamma_m);

  p.K_m = k_of_gamma(p, p.gamma_m);
  p.K_a = k_of_gamma(p, p.gamma_a);
  p.K_v = k_of_gamma(p, p.gamma_v);
  auto round_k = [&](double K, int& out, const char* name) {
    out = static_cast<int>(std::lround(K));
    if (std::fabs(K - out) > 1e-9)
      p.adjustments.push_back(std::string(name) + " rounded from " + std::to_string(K) + " to " + std::to_string(out));
  };
  round_k(p.K_m, p.K_m_int, "K_m");
  round_k(p.K_a, p.K_a_int, "K_a");
  round_k(p.K_v, p.K_v_int, "K_v");

  p.pre_beta = beta <= 1.0 / 3.0 + 1e-12;
  p.pre_delta = delta <= beta / 6.0 + 1e-12;
  p.pre_delta_N = delta * N >= 20.0 - 1e-9;
  p.gamma_order = beta > p.gamma_m && p.gamma_m > p.gamma_a && p.gamma_a > p.gamma_v && p.gamma_v > beta / 2.0;
  p.z_order = p.Z_m <= p.Z_a && p.Z_a <= p.Z_v;
  if (p.Z_a > p.Z_v) throw ConfigError("derive_parameters: Z_a exceeds Z_v");
  return p;
}

double initial_survivors(double lambda_dt, int d) {
  if (d < 0) return 0.0;
  return std::expm1(-lambda_dt * (d + 1.0)) / std::expm1(-lambda_dt);
}

int initial_launch_depth(double lambda_dt, int j) {
  if (j < 0) throw ParameterError("initial_launch_depth: j must be nonnegative");
  const double limit = -1.0 / std::expm1(-lambda_dt);
  if (!(j < limit)) throw ParameterError("initial_launch_depth: slot beyond the survivor limit");
  // Closed-form guess, then correct against the defining inequality.
  int d = static_cast<int>(std::floor(-std::log1p(std::expm1(-lambda_dt) * j) / lambda_dt));
  d = std::max(d, 0);
  while (d > 0 && initial_survivors(lambda_dt, d - 1) > j) --d;
  while (!(initial_survivors(lambda_dt, d) > j)) ++d;
  return d;
}

ChernoffResult chernoff_sum_bound(double eta, double M) {
  if (eta < 0.0 || M < 0.0) throw ParameterError("chernoff_sum_bound: arguments must be nonnegative");
  ChernoffResult r;
  r.in_domain = eta <= M;
  if (eta == 0.0) return r;
  r.bound = std::exp(-3.0 * eta * eta / (8.0 * M));
  return r;
}

double settled_loss_log_bound(const ParamSet& p, int K) {
  const double frac = -std::expm1(-p.lambda_dt * K);
  const double gap = p.beta_bar * p.N - p.N * frac;
  return -3.0 * gap * gap / (8.0 * p.N * frac);
}

AppendixA appendixA_bounds(const ParamSet& p, int k) {
  AppendixA a;
  const double N = p.N;
  const double gN = p.gbar * N;
  a.q = -std::expm1(-p.lambda_dt);
  const double qbar = 1.0 - a.q;
  a.eps_N = 1.0 / a.q - gN;
  a.eps_Nk = a.eps_N * (1.0 - std::pow(qbar, k));
  a.mean_M_k = gN * std::pow(qbar, k) + (1.0 - std::pow(qbar, k)) / a.q;
  a.W = static_cast<int>(std::ceil(std::log(2.0) * gN));
  const double eta_up = p.delta * N - 1.0 - a.eps_Nk;
  const double eta_lo = p.delta * N + a.eps_Nk;
  a.b_g_upper = std::exp(-3.0 * eta_up * eta_up / (8.0 * a.W));
  a.b_g_lower = std::exp(-3.0 * eta_lo * eta_lo / (8.0 * a.W));
  const double sk_m = choose2(p.K_m_int) * a.q;
  const double sk_v = choose2(p.K_v_int) * a.q;
  a.b_S = std::exp(-3.0 * std::pow(p.beta_bar - p.gamma_m, 2) * N * N / (8.0 * sk_m));
  a.b_Z = std::exp(-3.0 * std::pow(p.Z_a - p.Z_m, 2) * N * N / (8.0 * p.kappa * p.kappa * sk_v));
  a.per_event = std::exp(-3.0 * p.delta * p.delta * N / 8.0);
  a.aggregate = std::exp(3.0 * p.delta * p.delta * N / 8.0) / 8.0;
  a.settled_loss_log = settled_loss_log_bound(p, p.K_m_int);
  a.k_lemma_lhs = choose2(p.K_v_int) * a.q / N;
  a.k_lemma_rhs = p.gamma_v * p.gamma_v;
  a.k_lemma_holds = a.k_lemma_lhs <= a.k_lemma_rhs;
  a.k_lemma_hypotheses = p.gbar * p.gbar * p.beta_bar * N >= 10.0 && p.gbar * p.beta * N > 20.0 &&
                         p.gbar * p.delta * N >= 2.1 && p.beta <= 1.0 / 3.0 + 1e-12 &&
                         p.gamma_v <= p.gbar * p.beta_bar;
  a.preconditions = p.preconditions_hold();
  return a;
}

double solve_nu(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("solve_nu: gamma must lie in (0, 1)");
  // h(nu) = expm1(nu) - nu/gamma is negative just right of 0 and positive
  // once nu > -ln(gamma) + 1/gamma (a crude upper bracket).
  auto h = [gamma](double nu) { return std::expm1(nu) - nu / gamma; };
  double lo = 0.0, hi = 1.0;
  while (h(hi) <= 0.0) hi *= 2.0;
  // Lower bracket strictly positive: h < 0 on (0, nu*).
  lo = std::min(1e-3, hi / 2.0) * (1.0 - gamma);
  while (h(lo) >= 0.0) lo /= 2.0;
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto [a, b] = boost::math::tools::toms748_solve(h, lo, hi, tol, iters);
  double nu = 0.5 * (a + b);
  // Newton polish on the residual.
  for (int i = 0; i < 4; ++i) {
    const double d = std::exp(nu) - 1.0 / gamma;
    if (d == 0.0) break;
    nu -= h(nu) / d;
  }
  return nu;
}

double md1_excursion_bound(double gamma, double m) {
  if (m < 0.0) throw ParameterError("md1_excursion_bound: m must be nonnegative");
  return std::exp(-solve_nu(gamma) * m);
}

double Md1Grid::at(double x) const {
  if (x < 0.0) return 1.0;
  const double pos = (x + 1.0) / h;
  const int i = static_cast<int>(std::floor(pos));
  const int last = static_cast<int>(g.size()) - 1;
  if (i >= last) return g[last] * std::exp(-nu * (x - (-1.0 + last * h)));
  const double t = pos - i;
  const double a = g[i], b = g[i + 1];
  if (a <= 0.0 || b <= 0.0) return a + t * (b - a);
  return a * std::pow(b / a, t);
}

std::vector<double> md1_apply(const Md1Grid& grid, const std::vector<double>& g, bool pin_boundary) {
  const int n = static_cast<int>(g.size());
  const double gam = grid.gamma, h = grid.h;
  const double decay = std::exp(-gam * h);
  // J[i] = integral over [x_i, inf) of gam e^{-gam (u - x_i)} g(u) du
  std::vector<double> J(n);
  J[n - 1] = gam * g[n - 1] / (gam + grid.nu);
  for (int i = n - 2; i >= 0; --i) {
    const double a = g[i], b = g[i + 1];
    double seg;
    if (pin_boundary && i < grid.M) {
      seg = -std::expm1(-gam * h);  // [x_i, x_{i+1}) lies in [-1, 0) where g = 1
    } else if (a > 0.0 && b > 0.0) {
      const double r = std::log(b / a) / h;
      const double c = r - gam;
      seg = std::fabs(c * h) < 1e-12 ? gam * a * h : gam * a * std::expm1(c * h) / c;
    } else {
      seg = gam * h * 0.5 * (a + b);
    }
    J[i] = seg + decay * J[i + 1];
  }
  // I(g)(x) = J(x - 1); x_i - 1 is grid point i - M.
  std::vector<double> out(g);
  for (int i = 0; i < n; ++i) {
    if (pin_boundary && i < grid.M) {
      out[i] = 1.0;
      continue;
    }
    const int j = i - grid.M;
    if (j >= 0) {
      out[i] = J[j];
    } else {
      // Only reachable without the boundary pin: extend g past -1 exactly.
      out[i] = g[i];
    }
  }
  return out;
}

Md1Grid md1_solve(double gamma, double x_max, double tol, int points_per_unit) {
  Md1Grid grid;
  grid.gamma = gamma;
  grid.nu = solve_nu(gamma);
  grid.M = points_per_unit;
  grid.h = 1.0 / points_per_unit;
  grid.x_max = x_max + 20.0;
  const int n = static_cast<int>(std::ceil((grid.x_max + 1.0) * points_per_unit)) + 1;
  grid.g.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + i * grid.h;
    // Start from the lower sandwich; the operator is monotone so iterates rise.
    grid.g[i] = (i < grid.M) ? 1.0 : std::exp(-grid.nu * (x + 1.0));
  }
  for (int it = 1; it <= 100000; ++it) {
    auto next = md1_apply(grid, grid.g, true);
    double change = 0.0;
    for (int i = 0; i < n; ++i) change = std::max(change, std::fabs(next[i] - grid.g[i]));
    grid.g.swap(next);
    grid.iterations = it;
    if (change < tol) return grid;
  }
  throw NumericalError("md1_survival: iteration cap reached");
}

double md1_survival(double gamma, double x, double tol) {
  if (x < -1.0) throw ParameterError("md1_survival: x must be at least -1");
  if (x < 0.0) {
    solve_nu(gamma);  // domain check
    return 1.0;
  }
  return md1_solve(gamma, std::max(x, 1.0), tol).at(x);
}

MttdlComplete mttdl_lower_bound_complete(int N, double delta, double gamma, double lambda, double D) {
  MttdlComplete m;
  m.nu = solve_nu(gamma);
  const double dN = delta * N;
  const double cycle = D / ((1.0 - delta) * gamma) + 1.0 / (lambda * N);
  m.half_delta = std::expm1(m.nu * dN / 2.0) * cycle;
  m.literal = std::expm1(m.nu * dN) * cycle;
  return m;
}

double partial_mean_regenerated(int N, double delta, double lT, int beta_vN, double lambda_dt) {
  if (N < 1 || beta_vN < 0 || !(lT > 0.0) || !(lambda_dt > 0.0))
    throw ParameterError("partial_mean_regenerated: bad arguments");
  const double uncovered = std::max(0.0, lT - beta_vN * lambda_dt);
  return -(1.0 - delta) * N * std::expm1(-uncovered) + 1.0 + beta_vN;
}

ReadRateTargets read_rate_targets(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("read_rate_targets: beta must lie in (0, 1)");
  return {beta / 2.0, beta - std::log1p(-beta), 2.0 * beta};
}

double mip_mean(int N, double lambda, double D) {
  if (N < 1 || !(lambda > 0.0) || !(D > 0.0)) throw ParameterError("mip_mean: bad arguments");
  // Embedded chain at departures: X' = max(X, 1) - 1 + Bin(N - max(X, 1), p).
  const int S = N;  // states 0..N-1
  const double p = -std::expm1(-lambda * D);
  std::vector<std::vector<double>> P(S, std::vector<double>(S, 0.0));
  for (int x = 0; x < S; ++x) {
    const int busy = std::max(x, 1);
    const int up = N - busy;
    for (int a = 0; a <= up; ++a) {
      const int y = busy - 1 + a;
      if (y >= S) continue;
      const double lp = std::lgamma(up + 1.0) - std::lgamma(a + 1.0) - std::lgamma(up - a + 1.0) +
                        (a > 0 ? a * std::log(p) : 0.0) + (up - a > 0 ? (up - a) * std::log1p(-p) : 0.0);
      P[x][y] += std::exp(lp);
    }
  }
  // Solve pi (P - I) = 0 with sum(pi) = 1; replace the last equation.
  std::vector<std::vector<double>> A(S, std::vector<double>(S + 1, 0.0));
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  for (int j = 0; j < S; ++j) A[S - 1][j] = 1.0;
  A[S - 1][S] = 1.0;
  for (int c = 0; c < S; ++c) {
    int piv = c;
    for (int r = c + 1; r < S; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    const double d = A[c][c];
    if (d == 0.0) throw NumericalError("mip_mean: singular system");
    for (int r = 0; r < S; ++r) {
      if (r == c || A[r][c] == 0.0) continue;
      const double f = A[r][c] / d;
      for (int j = c; j <= S; ++j) A[r][j] -= f * A[c][j];
    }
  }
  double reward = 0.0, length = 0.0;
  const double partial = D - p / lambda;  // E (D - T)^+ for T ~ Exp(lambda)
  for (int x = 0; x < S; ++x) {
    const double pi = A[x][S] / A[x][x];
    if (x == 0) {
      reward += pi * (D + (N - 1) * partial);
      length += pi * (1.0 / (lambda * N) + D);
    } else {
      reward += pi * (x * D + (N - x) * partial);
      length += pi * D;
    }
  }
  return reward / length;
}

}  // namespace liquid
