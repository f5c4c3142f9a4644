#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "liquid/errors.hpp"
#include "liquid/failure.hpp"
#include "liquid/rng.hpp"

using namespace liquid;

namespace {

double chi2_upper(double stat, double dof) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), stat));
}

// Asymptotic Kolmogorov distribution tail P(K > x).
double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k < 100; ++k) s += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

TEST(RandomStream, SameCoordinatesSameValue) {
  RandomStream a(42, 7, 1000), b(42, 7, 1000);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_EQ(a, b);
  EXPECT_EQ(RandomStream(42, 7).at(5), RandomStream(42, 7, 5).next_u64());
  EXPECT_NE(RandomStream(42, 7).at(5), RandomStream(42, 8).at(5));
  EXPECT_NE(RandomStream(42, 7).at(5), RandomStream(43, 7).at(5));
}

TEST(RandomStream, UniformIsOpenInterval) {
  RandomStream s(3, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RandomStream, NextBelowInRange) {
  RandomStream s(9, 1);
  for (int i = 0; i < 10000; ++i) ASSERT_LT(s.next_below(7), 7u);
}

TEST(Lifetime, MeanMatchesInverseRate) {
  RandomStream s(1, 0);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_lifetime(s, 1.0);
  EXPECT_NEAR(sum / n, 1.0, 0.005);
}

TEST(Lifetime, HugeRateGivesTinyDurations) {
  RandomStream s(2, 0);
  std::vector<double> v(10001);
  for (double& x : v) x = sample_lifetime(s, 1e7);
  std::nth_element(v.begin(), v.begin() + 5000, v.end());
  EXPECT_LT(v[5000], 1e-6);
}

TEST(Lifetime, KolmogorovSmirnovAgainstExponential) {
  RandomStream s(5, 3);
  const int n = 20000;
  std::vector<double> v(n);
  for (double& x : v) x = sample_lifetime(s, 2.5);
  std::sort(v.begin(), v.end());
  double D = 0.0;
  for (int i = 0; i < n; ++i) {
    const double F = 1.0 - std::exp(-2.5 * v[i]);
    D = std::max({D, (i + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  EXPECT_GT(kolmogorov_tail(std::sqrt(static_cast<double>(n)) * D), 0.01);
}

TEST(Lifetime, NonPositiveRateRejected) {
  RandomStream s(1, 0);
  EXPECT_THROW(sample_lifetime(s, 0.0), ParameterError);
  EXPECT_THROW(sample_lifetime(s, -1.0), ParameterError);
}

TEST(Script, CountNearMeanInOneRun) {
  RandomStream s(11, 1);
  const auto script = generate_script(s, 100.0, 8, 10.0);
  EXPECT_NEAR(static_cast<double>(script.events.size()), 1000.0, 3.0 * std::sqrt(1000.0));
  EXPECT_NO_THROW(script.check());
}

TEST(Script, CountsArePoisson) {
  const int runs = 10000;
  const double mean = 10.0;  // rate 100 over horizon 0.1 keeps the test fast
  std::vector<long> hist(40, 0);
  for (int r = 0; r < runs; ++r) {
    RandomStream s(1000 + r, 1);
    const auto n = generate_script(s, 100.0, 4, 0.1).events.size();
    ++hist[std::min<std::size_t>(n, hist.size() - 1)];
  }
  boost::math::poisson pois(mean);
  // Pool tails so every cell expects at least 5.
  const int lo = 3, hi = 18;
  double stat = 0.0;
  int cells = 0;
  auto add = [&](double obs, double p) {
    const double e = p * runs;
    stat += (obs - e) * (obs - e) / e;
    ++cells;
  };
  double obs = 0;
  for (int k = 0; k <= lo; ++k) obs += hist[k];
  add(obs, boost::math::cdf(pois, lo));
  for (int k = lo + 1; k < hi; ++k) add(hist[k], boost::math::pdf(pois, k));
  obs = 0;
  for (std::size_t k = hi; k < hist.size(); ++k) obs += hist[k];
  add(obs, boost::math::cdf(boost::math::complement(pois, hi - 1)));
  EXPECT_GT(chi2_upper(stat, cells - 1), 0.01) << "chi2 = " << stat;
}

TEST(Script, TinyHorizonIsEmpty) {
  RandomStream s(1, 1);
  EXPECT_TRUE(generate_script(s, 10.0, 4, 1e-12).events.empty());
}

TEST(Script, NonPositiveHorizonRejected) {
  RandomStream s(1, 1);
  EXPECT_THROW(generate_script(s, 10.0, 4, 0.0), ParameterError);
  EXPECT_THROW(generate_script(s, 10.0, 4, -1.0), ParameterError);
}

TEST(Script, TargetsUniform) {
  RandomStream s(21, 1);
  FailureSource src(s, 1.0, 4);
  std::vector<long> c(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    ++c[src.peek()->target];
    src.pop();
  }
  double stat = 0.0;
  for (long x : c) {
    EXPECT_NEAR(static_cast<double>(x) / n, 0.25, 0.01);
    stat += (x - n / 4.0) * (x - n / 4.0) / (n / 4.0);
  }
  EXPECT_GT(chi2_upper(stat, 3), 0.01);
}

TEST(Script, ConsecutiveTargetsIndependent) {
  RandomStream s(22, 1);
  FailureSource src(s, 1.0, 4);
  std::vector<long> pairs(16, 0);
  int prev = src.peek()->target;
  src.pop();
  const int n = 80000;
  for (int i = 0; i < n; ++i) {
    const int cur = src.peek()->target;
    src.pop();
    ++pairs[prev * 4 + cur];
    prev = cur;
  }
  double stat = 0.0;
  for (long x : pairs) stat += (x - n / 16.0) * (x - n / 16.0) / (n / 16.0);
  EXPECT_GT(chi2_upper(stat, 15), 0.01);
}

TEST(Script, TimesIncreaseAndSourceMatchesScript) {
  RandomStream a(31, 1), b(31, 1);
  const auto script = generate_script(a, 3.0, 5, 20.0);
  FailureSource src(b, 3.0, 5);
  for (const auto& e : script.events) {
    ASSERT_EQ(*src.peek(), e);
    src.pop();
  }
  EXPECT_GT(src.peek()->time, 20.0);
  EXPECT_EQ(a, RandomStream(31, 1, b.counter + 2 * (src.consumed() + 1)));
}

TEST(Script, TextRoundTrip) {
  RandomStream s(41, 1);
  const auto script = generate_script(s, 5.0, 6, 10.0);
  std::stringstream ss;
  write_script(ss, script);
  const auto back = read_script(ss, 6);
  EXPECT_EQ(back.N, 6);
  EXPECT_EQ(back.events, script.events);
}

TEST(Script, CheckRejectsBadScripts) {
  FailureScript s{4, {{1.0, 0}, {0.5, 1}}};
  EXPECT_THROW(s.check(), ParameterError);
  FailureScript t{4, {{1.0, 4}}};
  EXPECT_THROW(t.check(), ParameterError);
}

TEST(Script, ReplaySourceEnds) {
  FailureSource src(FailureScript{3, {{0.5, 2}}});
  ASSERT_NE(src.peek(), nullptr);
  EXPECT_EQ(src.peek()->target, 2);
  src.pop();
  EXPECT_EQ(src.peek(), nullptr);
}
