#include <gtest/gtest.h>

#include <cmath>

#include "emergent/metrics.hpp"
#include "support.hpp"

using namespace emergent;

namespace {

MechanismReport report(const char* name, double re, double ir) {
  MechanismReport r;
  r.mechanism_name = name;
  r.n = 3;
  r.re = re;
  r.mean_ar = 1.0 / re;
  r.ir = ir;
  return r;
}

Dataset all_n3() { return Dataset{3, 0, fixtures::all_profiles(3)}; }

}  // namespace

TEST(RankEfficiency, Examples) {
  EXPECT_DOUBLE_EQ(rank_efficiency(1.0), 1.0);
  EXPECT_DOUBLE_EQ(rank_efficiency(2.0), 0.5);
  EXPECT_DOUBLE_EQ(rank_efficiency(3.0), 1.0 / 3.0);
  EXPECT_THROW(rank_efficiency(0.99), InputError);
  EXPECT_THROW(rank_efficiency(std::nan("")), InputError);
}

TEST(NormalizeAndEmt, AnchorsAndIdeal) {
  const auto rsd = report("RSD", 0.68, 1.0);
  const auto rm = report("RM", 0.73, 1.11);
  const auto ideal = report("IDEAL", rm.re, rsd.ir);
  const auto out = normalize_and_emt({rsd, rm, ideal}, rsd, rm);
  EXPECT_DOUBLE_EQ(out[0].re_norm, 0.0);
  EXPECT_DOUBLE_EQ(out[0].ir_norm, 0.0);
  EXPECT_NEAR(out[0].emt, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(out[1].re_norm, 1.0);
  EXPECT_DOUBLE_EQ(out[1].ir_norm, 1.0);
  EXPECT_NEAR(out[1].emt, 1.0, 1e-12);
  EXPECT_NEAR(out[2].emt, 0.0, 1e-12);
}

TEST(NormalizeAndEmt, InvariantUnderAffineRescaling) {
  const std::vector<MechanismReport> raw{report("RSD", 0.6, 1.0), report("PS", 0.62, 1.03),
                                         report("RM", 0.7, 1.2), report("X", 0.66, 1.01)};
  const auto base = normalize_and_emt(raw, raw[0], raw[2]);
  auto scaled = raw;
  for (auto& r : scaled) {
    r.re = 3.5 * r.re - 0.4;
    r.ir = 0.25 * r.ir + 7.0;
  }
  const auto moved = normalize_and_emt(scaled, scaled[0], scaled[2]);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    EXPECT_NEAR(moved[k].re_norm, base[k].re_norm, 1e-12);
    EXPECT_NEAR(moved[k].ir_norm, base[k].ir_norm, 1e-12);
    EXPECT_NEAR(moved[k].emt, base[k].emt, 1e-12);
    EXPECT_GE(base[k].emt, 0.0);
  }
}

TEST(NormalizeAndEmt, DegenerateAnchors) {
  const auto rsd = report("RSD", 0.7, 1.0);
  EXPECT_THROW(normalize_and_emt({rsd}, rsd, rsd), DegenerateAnchorError);
  EXPECT_THROW(normalize_and_emt({rsd}, rsd, report("RM", 0.8, 1.0)), DegenerateAnchorError);
  EXPECT_THROW(normalize_and_emt({rsd}, rsd, report("RM", 0.6, 1.2)), DegenerateAnchorError);
}

TEST(SampledIncentiveRatio, RsdExactlyOne) {
  const auto d = generate(4, 50, 1);
  EXPECT_EQ(sampled_incentive_ratio(RsdMechanism(), d, {}, 4, 30, 1, 9), 1.0);
  EXPECT_EQ(sampled_incentive_ratio(RsdMechanism(), generate(5, 10, 2), {}, 5, 10, 1, 9), 1.0);
}

TEST(SampledIncentiveRatio, SingleAgentMarket) {
  EXPECT_EQ(sampled_incentive_ratio(RmMechanism(), generate(1, 3, 0), {}, 1, 5, 1, 0), 1.0);
}

TEST(SampledIncentiveRatio, MatchesOracleWhenSamplingCoversEverything) {
  const auto d = all_n3();
  const RmMechanism rm;
  double oracle = 0.0;
  for (const auto& p : d.profiles)
    for (double r : exact_incentive_ratio(rm, p)) oracle += r / 3.0;
  oracle /= static_cast<double>(d.size());
  EXPECT_NEAR(sampled_incentive_ratio(rm, d, {}, 3, 200, 1, 5), oracle, 1e-12);
}

TEST(SampledIncentiveRatio, DeterministicAndThreadIndependent) {
  const auto d = generate(4, 40, 3);
  const PsMechanism ps;
  const double a = sampled_incentive_ratio(ps, d, {}, 2, 10, 1, 77, 1);
  const double b = sampled_incentive_ratio(ps, d, {}, 2, 10, 1, 77, 3);
  EXPECT_EQ(a, b);
  EXPECT_GE(a, 1.0);
}

TEST(SampledIncentiveRatio, MoreMisreportsNeverHurt) {
  const auto d = generate(4, 150, 6);
  const RmMechanism rm;
  double few = 0.0, many = 0.0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    few += sampled_incentive_ratio(rm, d, {}, 4, 2, 1, s);
    many += sampled_incentive_ratio(rm, d, {}, 4, 24, 1, s);
  }
  EXPECT_GE(many, few);
}

TEST(SampledIncentiveRatio, RejectsZeroParameters) {
  EXPECT_THROW(sampled_incentive_ratio(RmMechanism(), generate(3, 2, 0), {}, 0, 1, 1, 0), InputError);
}

TEST(Evaluate, UsesExactAllocations) {
  const auto d = generate(3, 100, 12);
  EvalConfig c;
  c.ir_mode = IrMode::Exact;
  const auto rsd = evaluate(RsdMechanism(), d, c);
  double ar = 0.0;
  for (const auto& p : d.profiles) ar += expected_average_rank(p, rsd_allocation(p));
  EXPECT_NEAR(rsd.report.mean_ar, ar / 100.0, 1e-12);
  EXPECT_EQ(rsd.report.ir, 1.0);
  EXPECT_DOUBLE_EQ(rsd.report.re, 1.0 / rsd.report.mean_ar);
  ASSERT_EQ(rsd.per_profile.size(), 100u);

  const auto rm = evaluate(RmMechanism(), d, c);
  EXPECT_LT(rm.report.mean_ar, rsd.report.mean_ar);
  EXPECT_GE(rm.report.ir, 1.0);
}

TEST(Evaluate, EmtAnchorsOnRealMechanisms) {
  const auto d = all_n3();
  EvalConfig c;
  c.ir_mode = IrMode::Exact;
  std::vector<MechanismReport> reports{evaluate(RsdMechanism(), d, c).report,
                                       evaluate(PsMechanism(), d, c).report,
                                       evaluate(RmMechanism(), d, c).report};
  const auto out = normalize_and_emt(reports, reports[0], reports[2]);
  EXPECT_NEAR(out[0].emt, 1.0, 1e-12);
  EXPECT_NEAR(out[2].emt, 1.0, 1e-12);
}

TEST(Evaluate, ExactModeNeedsSmallMarkets) {
  EvalConfig c;
  c.ir_mode = IrMode::Exact;
  EXPECT_THROW(evaluate(RsdMechanism(), generate(5, 2, 0), c), CapabilityError);
}

TEST(Evaluate, SamplesWhenNoExactAllocation) {
  const auto d = generate(9, 5, 3);
  EvalConfig c;
  c.ir_mode = IrMode::None;
  c.draws = 50;
  const auto r = evaluate(RsdMechanism(), d, c);
  EXPECT_GE(r.report.mean_ar, 1.0);
  EXPECT_LE(r.report.mean_ar, 9.0);
}

TEST(ReportCsv, HeaderAndRow) {
  auto r = report("RSD", 0.5, 1.0);
  r.mean_ar = 2.0;
  r.emt = 1.0;
  EXPECT_EQ(format_report_csv({r}),
            "mechanism,n,mean_ar,re,ir,re_norm,ir_norm,emt\n"
            "RSD,3,2.0000000000,0.5000000000,1.0000000000,0.0000000000,0.0000000000,1.0000000000\n");
}

TEST(ParallelFor, CoversEveryIndexAndPropagatesErrors) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t k) { hit[k] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t k) {
                 if (k == 7) throw InputError("boom");
               }),
               InputError);
}

TEST(Bootstrap, UpperBoundBracketsTheMean) {
  std::vector<double> v;
  Rng rng(4);
  for (int k = 0; k < 400; ++k) v.push_back(rng.uniform() - 0.5);
  double mean = 0.0;
  for (double x : v) mean += x / 400.0;
  const double hi = bootstrap_mean_upper(v, 0.95, 2000, 1);
  EXPECT_GT(hi, mean);
  EXPECT_LT(hi, mean + 0.05);
}
