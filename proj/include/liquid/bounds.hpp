#pragma once

#include <string>
#include <vector>

namespace liquid {

// Binomial(N, 1 - e^{-lT}) pmf at l, evaluated in log space.
double q_pmf(int N, double lambda_T_tot, int l);
double log_q_pmf(int N, double lambda_T_tot, int l);

// Mean erased count of the object at queue position x in [0, 1].
double expected_erased(int N, double lambda_T_tot, double x);

struct MttdlBasic {
  double value = 0.0;
  bool negative = false;  // absurd parameters; value returned as-is
  bool infinite = false;  // q(r) underflowed
};
MttdlBasic mttdl_lower_bound_basic(int N, int k_c, double lambda, double T_tot);

struct ParamSet {
  int N = 0;
  double beta = 0, delta = 0;
  double gbar = 0, beta_bar = 0;
  double xi = 0;
  double gamma_m = 0, gamma_a = 0, gamma_v = 0;
  double Z_m = 0, Z_a = 0, Z_v = 0;
  double K_m = 0, K_a = 0, K_v = 0;          // real-valued
  int K_m_int = 0, K_a_int = 0, K_v_int = 0;  // nearest integers
  double kappa = 0;
  double lambda_dt = 0;  // lambda * Delta_t
  double lambda_T_tot = 0;
  double beta_v = 0;

  // Preconditions of the concentration argument; warnings only.
  bool pre_beta = false;     // beta <= 1/3
  bool pre_delta = false;    // delta <= beta / 6
  bool pre_delta_N = false;  // delta N >= 20
  bool gamma_order = false;  // beta > gamma_m > gamma_a > gamma_v > beta / 2
  bool z_order = false;      // Z_m <= Z_a <= Z_v
  std::vector<std::string> adjustments;
  bool preconditions_hold() const { return pre_beta && pre_delta && pre_delta_N; }
};

// gamma(Z) and its inverse for a given parameter set.
double gamma_of_z(const ParamSet& p, double Z);
double z_of_gamma(const ParamSet& p, double gamma);
double k_of_gamma(const ParamSet& p, double gamma);

// Throws ConfigError when Z_a > Z_v.
ParamSet derive_parameters(int N, double beta, double delta);

// kappa = ((1 - delta) lT)^{-1}.
double schedule_kappa(double delta, double lambda_T_tot);

// Expected count of survivors at t=0 among launches at 0, -1, ..., -d.
double initial_survivors(double lambda_dt, int d);
// Smallest d with initial_survivors(d) > j.
int initial_launch_depth(double lambda_dt, int j);

struct ChernoffResult {
  double bound = 1.0;
  bool in_domain = true;  // false when eta > M; no claim is made there
};
ChernoffResult chernoff_sum_bound(double eta, double M);

struct AppendixA {
  double q = 0;          // per-launch-interval failure probability
  double eps_N = 0;      // 1/q - gbar N
  double eps_Nk = 0;     // eps_N (1 - qbar^k)
  double mean_M_k = 0;   // expected surviving launched nodes after launch k
  int W = 0;
  double b_g_upper = 0;  // P(M_k > N - 1)
  double b_g_lower = 0;  // P(M_k < (1 - 2 delta) N)
  double b_S = 0;
  double b_Z = 0;
  double per_event = 0;   // e^{-3 delta^2 N / 8}
  double aggregate = 0;   // lower bound on E(I_s)
  double settled_loss_log = 0;  // for K = K_m
  double k_lemma_lhs = 0, k_lemma_rhs = 0;  // C(K_v+1,2) q / N <= gamma_v^2
  bool k_lemma_holds = false;
  bool k_lemma_hypotheses = false;
  bool preconditions = false;
};
AppendixA appendixA_bounds(const ParamSet& p, int k);

// Log of the settled-loss tail bound for a window of K launches.
double settled_loss_log_bound(const ParamSet& p, int K);

// Positive root of e^nu = 1 + nu / gamma, gamma in (0, 1).
double solve_nu(double gamma);
double md1_excursion_bound(double gamma, double m);

// Ruin probability of x + sum(Q_i - 1), Q ~ Exp(gamma), with f = 1 on [-1, 0).
double md1_survival(double gamma, double x, double tol = 1e-13);

// Grid solver exposed for tests: values on x = i*h, i = -M..n_max*M.
struct Md1Grid {
  double gamma = 0, nu = 0, h = 0;
  int M = 0;            // points per unit
  double x_max = 0;
  std::vector<double> g;  // g[i] ~ f(-1 + i*h)
  int iterations = 0;
  double at(double x) const;
};
Md1Grid md1_solve(double gamma, double x_max, double tol = 1e-13, int points_per_unit = 100);
// One application of the integral operator; samples of g on the same grid,
// with an exponential tail of rate nu past the grid end.
std::vector<double> md1_apply(const Md1Grid& grid, const std::vector<double>& g, bool pin_boundary);

struct MttdlComplete {
  double nu = 0;
  double half_delta = 0;  // exponent nu * delta N / 2
  double literal = 0;     // exponent nu * delta N
};
MttdlComplete mttdl_lower_bound_complete(int N, double delta, double gamma, double lambda, double D);

// Steady-state mean regenerated count of a partial-scheme standard repair:
// settled fragments missing at the head, plus the transitional fragment and
// beta_vN virtual ones. The head last held every live node a cycle ago and
// kept gaining settled fragments for beta_vN launches after that.
double partial_mean_regenerated(int N, double delta, double lambda_T_tot, int beta_vN, double lambda_dt);

struct ReadRateTargets {
  double lower_bound = 0;     // beta / 2
  double partial_target = 0;  // beta - ln(1 - beta)
  double complete_target = 0; // 2 beta
};
ReadRateTargets read_rate_targets(double beta);

// Time-average number of nodes in repair for the finite-population queue
// with N sources of rate lambda and deterministic service D.
double mip_mean(int N, double lambda, double D);

}  // namespace liquid
