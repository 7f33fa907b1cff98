#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "diffbound/cate_bounds.hpp"
#include "diffbound/rng.hpp"
#include "diffbound/sim.hpp"

using namespace diffbound;

TEST_CASE("generated dataset is deterministic in the seed") {
  SimConfig cfg;
  cfg.n = 500;
  cfg.d = 3;
  cfg.seed = 12345;
  const Dataset a = generate(cfg);
  const Dataset b = generate(cfg);
  CHECK((a.y() - b.y()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.x() - b.x()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.z1() == b.z1());
  cfg.seed = 12346;
  const Dataset c = generate(cfg);
  CHECK(a.y() != c.y());
}

TEST_CASE("configuration invariants are enforced") {
  SimConfig cfg;
  cfg.p = 1.0;
  CHECK_THROWS_AS(generate(cfg), Error);
  cfg.p = 0.7;
  cfg.n = 5;
  CHECK_THROWS_AS(generate(cfg), Error);
  cfg.n = 100;
  cfg.d = 0;
  CHECK_THROWS_AS(generate(cfg), Error);
}

TEST_CASE("p near one starves the differential cells") {
  SimConfig cfg;
  cfg.n = 300;
  cfg.d = 2;
  cfg.p = 0.995;
  cfg.seed = 9;
  const Dataset d = generate(cfg);
  const CellCounts counts = cell_counts(d);
  // With C = 0 almost surely, z1 tracks z2 and the differential cells are
  // empty or nearly so; validation must flag the dataset.
  const ValidationReport report = validate(d);
  if (counts.n10 == 0 || counts.n01 == 0) {
    CHECK_FALSE(report.ok);
  } else {
    CHECK(counts.min_cell() < 10);
  }
}

TEST_CASE("delta zero passes an aggregate independence check over 100 seeds") {
  // Under delta = 0 the confounder does not load on z2; probe through the
  // outcome residual y - 1'x - theta z1, whose mean must not differ between
  // z2 groups. Aggregate the per-seed z statistics.
  double combined = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    SimConfig cfg;
    cfg.n = 400;
    cfg.d = 2;
    cfg.delta = 0.0;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const Dataset d = generate(cfg);
    double s1 = 0.0, s0 = 0.0, ss1 = 0.0, ss0 = 0.0;
    int n1 = 0, n0 = 0;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double r = d.y()[i] - d.x().row(i).sum() - 3.0 * d.z1()[k];
      if (d.z2()[k] == 1) {
        s1 += r;
        ss1 += r * r;
        ++n1;
      } else {
        s0 += r;
        ss0 += r * r;
        ++n0;
      }
    }
    const double m1 = s1 / n1, m0 = s0 / n0;
    const double v1 = ss1 / n1 - m1 * m1, v0 = ss0 / n0 - m0 * m0;
    combined += (m1 - m0) / std::sqrt(v1 / n1 + v0 / n0);
  }
  combined /= 10.0;  // sum of 100 approx-standard-normal stats over sqrt(100)
  CHECK(std::abs(combined) < 3.29);  // 1e-3 two-sided level
}

TEST_CASE("conditional estimator error shrinks with the sample (smoke test)") {
  SimConfig cfg;
  cfg.d = 2;
  cfg.p = 0.7;
  cfg.outcome = OutcomeKind::Heterogeneous;
  const double truth = true_cate(cfg, 1.0);

  auto median_abs_error = [&](std::int64_t n, std::uint64_t seed0) {
    std::vector<double> errors;
    for (int rep = 0; rep < 11; ++rep) {
      SimConfig c = cfg;
      c.n = n;
      c.seed = seed0 + static_cast<std::uint64_t>(rep);
      const Dataset d = generate(c);
      const PropensityModel m = fit_logistic(d);
      const Eigen::VectorXd xc = d.x().col(0);
      const double sd = std::sqrt((xc.array() - xc.mean()).square().sum() /
                                  (static_cast<double>(d.n()) - 1.0));
      const KernelSpec k3{KernelKind::Gaussian,
                          sd * std::pow(static_cast<double>(n), -0.2), 2};
      errors.push_back(std::abs(mu2_at(d, m, 1.0, k3, 0) - truth));
    }
    std::sort(errors.begin(), errors.end());
    return errors[errors.size() / 2];
  };
  const double coarse = median_abs_error(500, 11);
  const double fine = median_abs_error(5000, 17);
  CHECK(fine < coarse);
}

TEST_CASE("with delta zero the confounder ignores z2") {
  SimConfig cfg;
  cfg.n = 20000;
  cfg.d = 1;
  cfg.delta = 0.0;
  cfg.seed = 77;
  const Dataset d = generate(cfg);
  // U is not observable; probe independence through the outcome within the
  // concordant cells where the effect term is fixed.
  double mean1 = 0.0, mean0 = 0.0;
  int c1 = 0, c0 = 0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (d.z1()[k] == 1 && d.z2()[k] == 1) {
      mean1 += d.y()[i] - d.x().row(i).sum();
      ++c1;
    }
    if (d.z1()[k] == 1 && d.z2()[k] == 0) {
      mean0 += d.y()[i] - d.x().row(i).sum();
      ++c0;
    }
  }
  mean1 /= c1;
  mean0 /= c0;
  // both equal theta + kappa up to noise ~ sqrt(2)/sqrt(cell)
  CHECK(std::abs(mean1 - mean0) < 6.0 / std::sqrt(static_cast<double>(std::min(c1, c0))));
}

TEST_CASE("true average effect") {
  SimConfig cfg;
  SUBCASE("homogeneous is exactly theta") {
    const McValue v = true_ate(cfg);
    CHECK(v.value == 3.0);
    CHECK(v.se == 0.0);
  }
  SUBCASE("heterogeneous matches the closed form of the mixture") {
    cfg.outcome = OutcomeKind::Heterogeneous;
    cfg.p = 0.7;
    const McValue v = true_ate(cfg);
    CHECK(v.se < 1e-3);
    // E[sin(X/2)] for X ~ N(m,1) is exp(-1/8) sin(m/2)
    const double q = 0.15;
    const double expect =
        2.0 * std::exp(-0.125) * (q * std::sin(0.125) + q * std::sin(0.25)) + 2.5;
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-3));
  }
  SUBCASE("zero heterogeneity collapses to the offset") {
    cfg.outcome = OutcomeKind::Heterogeneous;
    cfg.alpha_het = 0.0;
    const McValue v = true_ate(cfg);
    CHECK(v.value == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("true conditional effect") {
  SimConfig cfg;
  SUBCASE("homogeneous ignores the query point") {
    CHECK(true_cate(cfg, -3.0) == 3.0);
    CHECK(true_cate(cfg, 5.0) == 3.0);
  }
  SUBCASE("heterogeneous evaluates the effect curve exactly") {
    cfg.outcome = OutcomeKind::Heterogeneous;
    CHECK(true_cate(cfg, 1.0) == doctest::Approx(3.4588510772).epsilon(1e-10));
    CHECK(true_cate(cfg, 0.0) == doctest::Approx(2.5));
  }
}

TEST_CASE("population oracle brackets the true effect in a reference cell") {
  SimConfig cfg;
  cfg.p = 0.7;
  cfg.d = 5;
  const MuOracle oracle = mu_oracle(cfg);
  const double truth = true_ate(cfg).value;
  const double lo = std::min(oracle.mu1.value, oracle.mu2.value);
  const double hi = std::max(oracle.mu1.value, oracle.mu2.value);
  const double slack = 3.0 * std::max(oracle.mu1.se, oracle.mu2.se);
  CHECK(lo - slack <= truth);
  CHECK(truth <= hi + slack);
  // the differential contrast sits well below the truth in this design
  CHECK(oracle.mu1.value < truth - 1.0);
  // the weighting estimand with the exact probabilities is centered at it
  CHECK(std::abs(oracle.mu2.value - truth) <= 4.0 * oracle.mu2.se);
}

TEST_CASE("coverage study input validation") {
  CoverageOptions options;
  options.reps = 0;
  CHECK_THROWS_AS(coverage_study({SimConfig{}}, options), Error);
  options.reps = 50;
  CHECK_THROWS_AS(coverage_study({}, options), Error);
}

TEST_CASE("desk-scale bounds coverage behaves like the reported pattern") {
  CoverageOptions options;
  options.reps = 60;
  options.what = CoverageWhat::Bounds;
  options.seed = 7;
  SimConfig lo_p;
  lo_p.p = 0.7;
  SimConfig hi_p;
  hi_p.p = 0.9;
  const auto rows = coverage_study({lo_p, hi_p}, options);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].failures == 0);
  CHECK(rows[0].bound_coverage > 0.8);
  CHECK(rows[1].bound_coverage < rows[0].bound_coverage + 0.1);
  CHECK(std::isnan(rows[0].ci_coverage));
  CHECK(rows[0].mean_lower < rows[0].mean_upper);
}

TEST_CASE("presets name the factorial cells") {
  const Preset p = preset_cell("table1-cell1");
  CHECK(p.config.n == 1000);
  CHECK(p.config.d == 5);
  CHECK(p.config.p == 0.7);
  CHECK(p.config.delta == 0.0);
  CHECK(p.config.outcome == OutcomeKind::Homogeneous);
  CHECK(p.target == CoverageTarget::Ate);
  CHECK(p.what == CoverageWhat::Ci);

  const Preset q = preset_cell("table5-cell6-delta1");
  CHECK(q.config.p == 0.9);
  CHECK(q.config.delta == 1.0);
  CHECK(q.config.outcome == OutcomeKind::Heterogeneous);
  CHECK(q.target == CoverageTarget::CateAtOne);
  CHECK(q.what == CoverageWhat::Bounds);

  CHECK_THROWS_AS(preset_cell("table3-cell1"), Error);
  CHECK_THROWS_AS(preset_cell("nonsense"), Error);
  CHECK(preset_names().size() == 48);
}

TEST_CASE("coverage tables render every row") {
  CoverageRow row;
  row.label = "n=1000 d=5 p=0.7 delta=0 homogeneous";
  row.reps = 200;
  row.truth = 3.0;
  row.bound_coverage = 0.95;
  row.ci_coverage = 1.0;
  row.mean_lower = 1.7;
  row.mean_upper = 3.5;
  const std::string text = coverage_table_text({row});
  CHECK(text.find("0.950") != std::string::npos);
  CHECK(text.find("1.000") != std::string::npos);
  const std::string csv = coverage_table_csv({row});
  CHECK(csv.find("bound_coverage") != std::string::npos);
  CHECK(csv.find("0.95") != std::string::npos);
}
