#include <gtest/gtest.h>

#include "metrics_cases.hpp"
#include "sgnav/common.hpp"
#include "sgnav/metrics.hpp"

using namespace sgnav;

TEST(Metrics, SplTable) {
  for (const auto& c : kSplCases)
    EXPECT_NEAR(spl(c.success, c.path, c.optimal), c.expected, 1e-9) << c.path << " " << c.optimal;
}

TEST(Metrics, SoftSplTable) {
  for (const auto& c : kSoftSplCases)
    EXPECT_NEAR(soft_spl(c.d_start, c.d_final, c.path, c.optimal), c.expected, 1e-9) << c.d_start << " " << c.d_final;
}

TEST(Metrics, RejectsBadInputs) {
  EXPECT_THROW(soft_spl(0.0, 0.0, 1.0, 1.0), ValidationError);
  EXPECT_THROW(spl(true, -1.0, 1.0), ValidationError);
}

TEST(Metrics, SplNeverExceedsSuccessIndicator) {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    bool s = rng.uniform() < 0.5;
    double path = rng.uniform(0, 30), opt = rng.uniform(0, 30);
    double v = spl(s, path, opt);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, s ? 1.0 : 0.0);
    double sv = soft_spl(rng.uniform(0.1, 20), rng.uniform(0, 30), path, opt);
    EXPECT_GE(sv, 0.0);
    EXPECT_LE(sv, 1.0);
  }
}
