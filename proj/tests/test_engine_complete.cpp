#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "liquid/engine_complete.hpp"
#include "liquid/errors.hpp"

using namespace liquid;

namespace {

SystemConfig complete_cfg(int N, int k_c, int bvN, int n_obj, CompletePolicy pol = CompletePolicy::ancillary_first) {
  SystemConfig c;
  c.scheme = Scheme::complete;
  c.N = N;
  c.k_c = k_c;
  c.beta_vN = bvN;
  c.n_obj = n_obj;
  c.complete_policy = pol;
  return c;
}

SystemConfig fig_cfg(CompletePolicy pol = CompletePolicy::ancillary_first) { return complete_cfg(40, 36, 10, 400, pol); }

void drain(CompleteBase& e) {
  while (!e.idle()) e.repair_step();
}

void expect_same(const CompleteExplicit& e, const CompleteAggregate& a) {
  ASSERT_EQ(e.canonical(), a.canonical());
  ASSERT_EQ(e.backlog(), a.backlog());
  ASSERT_EQ(e.E_max(), a.E_max());
  ASSERT_EQ(e.worst_erased(), a.worst_erased());
  for (int p = 0; p < e.n_obj(); ++p) ASSERT_EQ(e.erased_at(p), a.erased_at(p)) << p;
}

}  // namespace

TEST(CompleteState, Staircase) {
  CompleteAggregate a(fig_cfg());
  EXPECT_EQ(a.staircase(399), 1);
  EXPECT_EQ(a.staircase(0), 10);
  EXPECT_EQ(a.staircase(400), 0);
  // Steps are 40 objects wide.
  for (int p = 0; p < 400; ++p) EXPECT_EQ(a.staircase(p), 10 - p / 40);
  long total = 0;
  for (int p = 0; p < 400; ++p) total += a.staircase(p);
  EXPECT_LE(std::abs(total - 10 * 400 / 2), 400 / 2);
}

TEST(CompleteState, InitialIsComplete) {
  CompleteExplicit e(fig_cfg());
  CompleteAggregate a(fig_cfg());
  EXPECT_TRUE(e.is_complete());
  EXPECT_TRUE(a.is_complete());
  expect_same(e, a);
  EXPECT_FALSE(e.detect_data_loss());
  const auto s = e.check_safety();
  EXPECT_FALSE(s.actual_loss);
  EXPECT_FALSE(s.sufficient_violated);
  EXPECT_THROW(e.repair_step(), SequencingError);
  for (int p = 0; p < 400; ++p) {
    EXPECT_EQ(e.virtual_at(p), e.staircase(p));
    EXPECT_EQ(e.erased_at(p), -e.staircase(p));
  }
}

TEST(CompleteFailure, FromCompleteState) {
  CompleteExplicit e(fig_cfg());
  CompleteAggregate a(fig_cfg());
  const int Y = 7;
  const auto f = e.apply_failure(Y);
  const auto fa = a.apply_failure(Y);
  EXPECT_FALSE(f.noop);
  EXPECT_EQ(f.E, 0);
  EXPECT_EQ(f.settled_erased, 400);
  int group_virtual = 0;
  for (int o = f.slot; o < 400; o += 40) group_virtual += e.staircase(o);  // object id = start position
  EXPECT_EQ(f.virtual_erased, group_virtual);
  EXPECT_EQ(fa.settled_erased, f.settled_erased);
  EXPECT_EQ(fa.virtual_erased, f.virtual_erased);
  EXPECT_EQ(e.backlog(), 1);
  EXPECT_FALSE(e.is_complete());
  expect_same(e, a);
}

TEST(CompleteFailure, PendingNodeIsImmune) {
  CompleteExplicit e(fig_cfg());
  e.apply_failure(3);
  EXPECT_TRUE(e.apply_failure(0).noop);
  EXPECT_EQ(e.backlog(), 1);
}

TEST(CompleteFailure, SecondFailureWaitsBehindFirst) {
  const auto c = complete_cfg(8, 6, 2, 16);
  CompleteExplicit e(c);
  CompleteAggregate a(c);
  const auto f1 = e.apply_failure(2);
  a.apply_failure(2);
  const auto f2 = e.apply_failure(5);
  a.apply_failure(5);
  EXPECT_EQ(f1.E, 0);
  EXPECT_EQ(f2.E, 1);
  ASSERT_EQ(e.jobs().size(), 2u);
  EXPECT_EQ(e.jobs()[0].E, 0);
  EXPECT_EQ(e.jobs()[1].E, 1);
  // Launched slots are listed youngest first; with one pending node,
  // target 5 is launched entry 4.
  EXPECT_EQ(f1.slot, 2);
  EXPECT_EQ(f2.slot, 5);
  // Hand count: symbols 0..7 launched, 8, 9 virtual. Object 5 (group 5)
  // lost symbols 2 and 5 and its virtual fragments; object 2 the same.
  EXPECT_EQ(e.access_erased_at(5), 2);
  EXPECT_EQ(e.virtual_at(5), 0);
  EXPECT_EQ(e.access_erased_at(2), 2);
  EXPECT_EQ(e.virtual_at(2), 0);
  // Object 0 holds its staircase of two rows; one of them now stands for
  // the first replacement's symbol.
  EXPECT_EQ(e.staircase(0), 2);
  EXPECT_EQ(e.virtual_at(0), 2);
  EXPECT_EQ(e.erased_at(0), 0);
  expect_same(e, a);
}

TEST(CompleteRepair, RestoresCompleteStateForEveryNode) {
  const auto c = fig_cfg();
  const CompleteAggregate ref(c);
  const auto target = ref.canonical();
  double total = 0;
  long count = 0;
  for (int Y = 0; Y < 40; ++Y) {
    CompleteExplicit e(c);
    CompleteAggregate a(c);
    e.apply_failure(Y);
    a.apply_failure(Y);
    while (!e.idle()) {
      const auto s = e.repair_step();
      const auto sa = a.repair_step();
      ASSERT_EQ(s.action, sa.action);
      ASSERT_EQ(s.regenerated, sa.regenerated);
      if (s.action == CompleteAction::ancillary) {
        total += s.regenerated;
        ++count;
      }
    }
    EXPECT_TRUE(e.is_complete()) << Y;
    EXPECT_TRUE(a.is_complete()) << Y;
    EXPECT_EQ(e.canonical(), target);
    expect_same(e, a);
  }
  EXPECT_EQ(count, 40 * 10);
  // Group members sit one per staircase step, so the mean is the mean step
  // height (beta_vN + 1) / 2.
  EXPECT_DOUBLE_EQ(total / count, 5.5);
}

TEST(CompleteRepair, SingleFailureOneCycleLength) {
  CompleteAggregate a(fig_cfg(CompletePolicy::synchronized));
  a.apply_failure(11);
  int steps = 0;
  while (!a.idle()) {
    a.repair_step();
    ++steps;
  }
  EXPECT_EQ(steps, a.slots_per_job());
  EXPECT_EQ(a.job_repairs(), 40);
  EXPECT_EQ(a.group_size(), 10);
  EXPECT_TRUE(a.is_complete());
}

TEST(CompleteRepair, BurstOfThree) {
  for (auto pol : {CompletePolicy::ancillary_first, CompletePolicy::synchronized}) {
    const auto c = fig_cfg(pol);
    CompleteExplicit e(c);
    CompleteAggregate a(c);
    for (int Y : {5, 20, 39}) {
      e.apply_failure(Y);
      a.apply_failure(Y);
      expect_same(e, a);
    }
    EXPECT_EQ(e.backlog(), 3);
    while (!e.idle()) {
      e.repair_step();
      a.repair_step();
      expect_same(e, a);
      EXPECT_EQ(e.is_complete(), a.is_complete());
    }
    EXPECT_TRUE(e.is_complete());
    EXPECT_TRUE(a.is_complete());
  }
}

TEST(CompleteRepair, AncillaryFirstClearsGroupGaps) {
  const auto c = complete_cfg(16, 12, 2, 64);
  CompleteExplicit e(c);
  std::mt19937 rng(2);
  for (int s = 0; s < 4000; ++s) {
    if (e.idle() || std::bernoulli_distribution(0.05)(rng)) {
      e.apply_failure(std::uniform_int_distribution<int>(0, 15)(rng));
      continue;
    }
    if (e.repair_step().action != CompleteAction::standard) continue;
    // Every pending ancillary repair ran before this standard one.
    for (int p = 0; p < e.n_obj(); ++p) ASSERT_EQ(e.access_erased_at(p), e.backlog());
  }
}

TEST(CompleteEngines, RandomRunsAgree) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 16; ++trial) {
    const int N = std::uniform_int_distribution<int>(4, 40)(rng);
    const int bvN = std::uniform_int_distribution<int>(1, 4)(rng);
    const int n_obj = N * bvN * std::uniform_int_distribution<int>(1, 3)(rng);
    const auto pol = trial % 2 ? CompletePolicy::synchronized : CompletePolicy::ancillary_first;
    const auto c = complete_cfg(N, std::max(1, N - 3), bvN, n_obj, pol);
    CompleteExplicit e(c);
    CompleteAggregate a(c);
    const double p_fail = std::uniform_real_distribution<double>(0.005, 0.05)(rng);
    for (int s = 0; s < 1500; ++s) {
      if (e.idle() || std::bernoulli_distribution(p_fail)(rng)) {
        const int Y = std::uniform_int_distribution<int>(0, N - 1)(rng);
        const auto f = e.apply_failure(Y);
        const auto fa = a.apply_failure(Y);
        ASSERT_EQ(f.noop, fa.noop);
        ASSERT_EQ(f.settled_erased, fa.settled_erased);
        ASSERT_EQ(f.virtual_erased, fa.virtual_erased);
      } else {
        const auto se = e.repair_step();
        const auto sa = a.repair_step();
        ASSERT_EQ(se.action, sa.action);
        ASSERT_EQ(se.regenerated, sa.regenerated);
        ASSERT_EQ(se.dropped, sa.dropped);
        ASSERT_EQ(se.launched_slot, sa.launched_slot);
      }
      expect_same(e, a);
      ASSERT_EQ(e.is_complete(), a.is_complete());
      // The backlog plus the largest failure-time backlog bounds every erasure count.
      int Emax = 0;
      for (const auto& j : e.jobs()) Emax = std::max(Emax, j.E);
      ASSERT_LE(e.worst_erased(), e.backlog() + Emax);
      const auto canon = e.canonical();
      for (int p = 0; p < n_obj; ++p) ASSERT_TRUE(canon[p].prefix);
    }
    drain(e);
    drain(a);
    EXPECT_TRUE(e.is_complete());
    EXPECT_TRUE(a.is_complete());
  }
}

TEST(CompleteSafety, BoundaryAtRedundancy) {
  // delta N = 4. Four failures with no repair leave the last group's objects
  // with exactly four erased fragments; the fifth crosses the boundary.
  const auto c = complete_cfg(40, 36, 1, 80, CompletePolicy::synchronized);
  CompleteExplicit e(c);
  CompleteAggregate a(c);
  for (int i = 0; i < 4; ++i) {
    e.apply_failure(39);
    a.apply_failure(39);
  }
  EXPECT_EQ(e.worst_erased(), 4);
  EXPECT_EQ(a.worst_erased(), 4);
  EXPECT_FALSE(e.detect_data_loss());
  EXPECT_FALSE(a.detect_data_loss());
  EXPECT_TRUE(e.check_safety().sufficient_violated);
  EXPECT_FALSE(e.check_safety().actual_loss);
  e.apply_failure(39);
  a.apply_failure(39);
  const auto le = e.detect_data_loss(), la = a.detect_data_loss();
  ASSERT_TRUE(le);
  ASSERT_TRUE(la);
  EXPECT_EQ(le->erased, 5);
  EXPECT_EQ(le->position, la->position);
  EXPECT_TRUE(e.check_safety().actual_loss);
}

TEST(CompleteSafety, SufficientConditionIsNotNecessary) {
  const auto c = complete_cfg(40, 36, 2, 80);
  CompleteAggregate a(c);
  a.apply_failure(10);
  a.apply_failure(30);
  const auto s = a.check_safety();
  EXPECT_TRUE(s.sufficient_violated);
  EXPECT_FALSE(s.actual_loss);
  EXPECT_FALSE(a.detect_data_loss());
}

TEST(CompleteConfig, Divisibility) {
  EXPECT_THROW(CompleteAggregate(complete_cfg(40, 36, 10, 380)), ConfigError);
  EXPECT_THROW(CompleteAggregate(complete_cfg(40, 36, 0, 400)), ConfigError);
  EXPECT_THROW(CompleteAggregate(complete_cfg(40, 36, 3, 400)), ConfigError);
}
