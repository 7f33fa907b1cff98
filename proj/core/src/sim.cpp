#include "diffbound/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "diffbound/cate_bounds.hpp"
#include "diffbound/kernel.hpp"
#include "diffbound/moment_inference.hpp"
#include "diffbound/parallel.hpp"
#include "diffbound/propensity.hpp"
#include "diffbound/rng.hpp"

namespace diffbound {

namespace {

constexpr double kClassMeans[3] = {0.0, 0.25, 0.50};
constexpr std::int64_t kOracleDraws = 10'000'000;

void check_config(const SimConfig& cfg) {
  if (!(cfg.p > 0.0 && cfg.p < 1.0)) throw Error("p must lie in (0,1)");
  if (cfg.n < 10) throw Error("n must be at least 10");
  if (cfg.d < 1) throw Error("d must be at least 1");
  if (!(cfg.sigma2_nu >= 0.0) || !(cfg.omega2_eps >= 0.0)) {
    throw Error("variance parameters must be non-negative");
  }
}

double outcome_effect(const SimConfig& cfg, double x1) {
  return cfg.outcome == OutcomeKind::Homogeneous
             ? cfg.theta
             : cfg.alpha_het * std::sin(x1 / 2.0) + cfg.beta_het;
}

struct Row {
  int z1 = 0, z2 = 0, c = 0;
  double y = 0.0;
};

// One observation; x is written into the caller's buffer of length d.
Row draw_row(const SimConfig& cfg, Rng& rng, double* x) {
  Row row;
  row.z2 = rng.bernoulli(0.5) ? 1 : 0;
  row.c = rng.trinomial(cfg.p, (1.0 - cfg.p) / 2.0);
  row.z1 = row.c == 0 ? row.z2 : (row.c == 1 ? 1 : 0);
  double xsum = 0.0;
  for (int j = 0; j < cfg.d; ++j) {
    x[j] = rng.normal() + kClassMeans[row.c];
    xsum += x[j];
  }
  const double u = cfg.kappa + cfg.delta * row.z2 +
                   std::sqrt(cfg.sigma2_nu) * rng.normal();
  const double eps = std::sqrt(cfg.omega2_eps) * rng.normal();
  row.y = outcome_effect(cfg, x[0]) * row.z1 + xsum + u + eps;
  return row;
}

}  // namespace

Dataset generate(const SimConfig& cfg) {
  check_config(cfg);
  Rng rng(stream_seed(cfg.seed, {0}));
  Eigen::VectorXd y(cfg.n);
  std::vector<int> z1(static_cast<std::size_t>(cfg.n));
  std::vector<int> z2(static_cast<std::size_t>(cfg.n));
  Eigen::MatrixXd x(cfg.n, cfg.d);
  std::vector<double> xrow(static_cast<std::size_t>(cfg.d));
  for (std::int64_t i = 0; i < cfg.n; ++i) {
    const Row row = draw_row(cfg, rng, xrow.data());
    y[i] = row.y;
    z1[static_cast<std::size_t>(i)] = row.z1;
    z2[static_cast<std::size_t>(i)] = row.z2;
    for (int j = 0; j < cfg.d; ++j) x(i, j) = xrow[static_cast<std::size_t>(j)];
  }
  return Dataset(std::move(y), std::move(z1), std::move(z2), std::move(x));
}

McValue true_ate(const SimConfig& cfg) {
  check_config(cfg);
  if (cfg.outcome == OutcomeKind::Homogeneous) {
    return {cfg.theta, 0.0};
  }
  // alpha E[sin(X1/2)] + beta over the three-class mixture of X1, by Monte
  // Carlo with a fixed internal stream so the oracle is a pure function of
  // the configuration.
  Rng rng(stream_seed(0xD1FFB0A7ULL, {1}));
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t i = 0; i < kOracleDraws; ++i) {
    const int c = rng.trinomial(cfg.p, (1.0 - cfg.p) / 2.0);
    const double x1 = rng.normal() + kClassMeans[c];
    const double s = std::sin(x1 / 2.0);
    sum += s;
    sumsq += s * s;
  }
  const double n = static_cast<double>(kOracleDraws);
  const double mean = sum / n;
  const double var = std::max(sumsq / n - mean * mean, 0.0);
  return {cfg.alpha_het * mean + cfg.beta_het,
          std::abs(cfg.alpha_het) * std::sqrt(var / n)};
}

double true_cate(const SimConfig& cfg, double x1) {
  check_config(cfg);
  return outcome_effect(cfg, x1);
}

MuOracle mu_oracle(const SimConfig& cfg) {
  check_config(cfg);
  Rng rng(stream_seed(0xD1FFB0A7ULL, {2, cfg.seed}));
  const double q = (1.0 - cfg.p) / 2.0;
  const double log_pi[3] = {std::log(cfg.p), std::log(q), std::log(q)};

  double sum10 = 0.0, sumsq10 = 0.0, sum01 = 0.0, sumsq01 = 0.0;
  std::int64_t n10 = 0, n01 = 0;
  double sum_w = 0.0, sumsq_w = 0.0;
  std::vector<double> x(static_cast<std::size_t>(cfg.d));
  for (std::int64_t i = 0; i < kOracleDraws; ++i) {
    const Row row = draw_row(cfg, rng, x.data());
    if (row.z1 == 1 && row.z2 == 0) {
      sum10 += row.y;
      sumsq10 += row.y * row.y;
      ++n10;
    } else if (row.z1 == 0 && row.z2 == 1) {
      sum01 += row.y;
      sumsq01 += row.y * row.y;
      ++n01;
    }
    // Exact conditional treatment probability: the class posterior given x
    // only depends on s = sum(x) because the class shifts are exchangeable
    // across coordinates with unit covariance.
    double s = 0.0;
    for (int j = 0; j < cfg.d; ++j) s += x[static_cast<std::size_t>(j)];
    double t[3], tmax = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < 3; ++c) {
      t[c] = log_pi[c] + kClassMeans[c] * s -
             0.5 * cfg.d * kClassMeans[c] * kClassMeans[c];
      tmax = std::max(tmax, t[c]);
    }
    double norm = 0.0;
    for (double& tc : t) {
      tc = std::exp(tc - tmax);
      norm += tc;
    }
    const double pc0 = t[0] / norm, pc1 = t[1] / norm;
    double e = row.z2 == 1 ? pc0 + pc1 : pc1;
    e = std::clamp(e, kProbabilityClip, 1.0 - kProbabilityClip);
    const double w = row.z1 == 1 ? row.y / e : -row.y / (1.0 - e);
    sum_w += w;
    sumsq_w += w * w;
  }
  if (n10 == 0 || n01 == 0) {
    throw Error("mu_oracle drew an empty differential cell; p is too extreme");
  }

  MuOracle oracle;
  const double m10 = sum10 / static_cast<double>(n10);
  const double m01 = sum01 / static_cast<double>(n01);
  const double v10 = std::max(sumsq10 / static_cast<double>(n10) - m10 * m10, 0.0);
  const double v01 = std::max(sumsq01 / static_cast<double>(n01) - m01 * m01, 0.0);
  oracle.mu1.value = m10 - m01;
  oracle.mu1.se = std::sqrt(v10 / static_cast<double>(n10) +
                            v01 / static_cast<double>(n01));
  const double n = static_cast<double>(kOracleDraws);
  const double mw = sum_w / n;
  const double vw = std::max(sumsq_w / n - mw * mw, 0.0);
  oracle.mu2.value = mw;
  oracle.mu2.se = std::sqrt(vw / n);
  return oracle;
}

namespace {

std::string cell_label(const SimConfig& cfg) {
  std::ostringstream out;
  out << "n=" << cfg.n << " d=" << cfg.d << " p=" << cfg.p
      << " delta=" << cfg.delta << ' '
      << (cfg.outcome == OutcomeKind::Homogeneous ? "homogeneous"
                                                  : "heterogeneous");
  return out.str();
}

struct RepResult {
  bool ok = false;
  bool bound_covered = false;
  bool ci_covered = false;
  double lower = 0.0, upper = 0.0;
};

CateKernels cv_kernels(const Dataset& data, const PropensityModel& m,
                       int cov_index) {
  const Eigen::VectorXd xc = data.x().col(cov_index);
  const std::vector<double> grid = default_bandwidth_grid(xc);
  const auto rows10 = cell_rows(data, 1, 0);
  const auto rows01 = cell_rows(data, 0, 1);
  auto take = [&](const std::vector<Eigen::Index>& rows, const Eigen::VectorXd& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out[static_cast<Eigen::Index>(k)] = v[rows[k]];
    }
    return out;
  };
  CateKernels kernels;
  kernels.k1.bandwidth = select_bandwidth_cv(take(rows10, xc), take(rows10, data.y()),
                                             KernelKind::Gaussian, grid);
  kernels.k2.bandwidth = select_bandwidth_cv(take(rows01, xc), take(rows01, data.y()),
                                             KernelKind::Gaussian, grid);
  kernels.k3.bandwidth = select_bandwidth_cv(xc, ipw_summands(data, m),
                                             KernelKind::Gaussian, grid);
  return kernels;
}

}  // namespace

std::vector<CoverageRow> coverage_study(const std::vector<SimConfig>& cells,
                                        const CoverageOptions& options) {
  if (options.reps < 50) throw Error("coverage_study needs reps >= 50");
  if (cells.empty()) throw Error("coverage_study needs at least one cell");

  std::vector<CoverageRow> rows;
  for (std::size_t cell_idx = 0; cell_idx < cells.size(); ++cell_idx) {
    const SimConfig& cell = cells[cell_idx];
    check_config(cell);
    const double truth = options.target == CoverageTarget::Ate
                             ? true_ate(cell).value
                             : true_cate(cell, 1.0);

    std::vector<RepResult> results(static_cast<std::size_t>(options.reps));
    parallel_for(results.size(), [&](std::size_t rep) {
      RepResult& r = results[rep];
      try {
        SimConfig draw = cell;
        draw.seed = stream_seed(options.seed,
                                {static_cast<std::uint64_t>(cell_idx), rep, 1});
        const Dataset data = generate(draw);
        const PropensityModel m = fit_logistic(data);

        BootstrapConfig boot_config;
        double lower = 0.0, upper = 0.0;
        if (options.target == CoverageTarget::Ate) {
          const BoundsEstimate est = ate_bounds(data, m, options.direction);
          lower = est.tau_minus;
          upper = est.tau_plus;
        } else {
          const CateKernels kernels = cv_kernels(data, m, 0);
          const CateEstimate est =
              cate_bounds(data, m, 1.0, kernels, 0, options.direction);
          lower = est.tau_minus_x;
          upper = est.tau_plus_x;
          boot_config.cate = CateQuery{1.0, 0, kernels};
        }
        r.bound_covered = lower <= truth && truth <= upper;
        r.lower = lower;
        r.upper = upper;

        if (options.what == CoverageWhat::Ci) {
          const BootstrapDraws draws = bootstrap_estimates(
              data, boot_config, options.n_boot,
              stream_seed(options.seed,
                          {static_cast<std::uint64_t>(cell_idx), rep, 2}));
          const ConfidenceRegion region =
              confidence_region(draws, options.alpha, options.beta,
                                options.direction);
          r.ci_covered = region.lower <= truth && truth <= region.upper;
          r.lower = region.lower;
          r.upper = region.upper;
        }
        r.ok = true;
      } catch (const std::exception&) {
        r.ok = false;
      }
    });

    CoverageRow row;
    row.label = cell_label(cell);
    row.reps = options.reps;
    row.truth = truth;
    int ok = 0, bound = 0, ci = 0;
    double lo_sum = 0.0, hi_sum = 0.0;
    for (const RepResult& r : results) {
      if (!r.ok) {
        ++row.failures;
        continue;
      }
      ++ok;
      bound += r.bound_covered ? 1 : 0;
      ci += r.ci_covered ? 1 : 0;
      lo_sum += r.lower;
      hi_sum += r.upper;
    }
    row.failed = row.failures > options.reps / 20;
    if (ok > 0) {
      row.bound_coverage = static_cast<double>(bound) / ok;
      row.ci_coverage = options.what == CoverageWhat::Ci
                            ? static_cast<double>(ci) / ok
                            : std::numeric_limits<double>::quiet_NaN();
      row.mean_lower = lo_sum / ok;
      row.mean_upper = hi_sum / ok;
    } else {
      row.bound_coverage = std::numeric_limits<double>::quiet_NaN();
      row.ci_coverage = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Preset preset_cell(const std::string& name) {
  // tableN-cellK[-delta1]
  std::string base = name;
  bool delta1 = false;
  const std::string suffix = "-delta1";
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    delta1 = true;
    base = base.substr(0, base.size() - suffix.size());
  }
  int table = 0, cell = 0;
  if (std::sscanf(base.c_str(), "table%d-cell%d", &table, &cell) != 2 ||
      (table != 1 && table != 2 && table != 4 && table != 5) || cell < 1 ||
      cell > 6) {
    throw Error("unknown preset '" + name + "'");
  }
  Preset preset;
  preset.config.n = 1000;
  preset.config.d = 5;
  preset.config.delta = delta1 ? 1.0 : 0.0;
  preset.config.outcome =
      cell <= 3 ? OutcomeKind::Homogeneous : OutcomeKind::Heterogeneous;
  const double ps[3] = {0.7, 0.8, 0.9};
  preset.config.p = ps[(cell - 1) % 3];
  preset.target = (table == 1 || table == 4) ? CoverageTarget::Ate
                                             : CoverageTarget::CateAtOne;
  preset.what = (table == 1 || table == 2) ? CoverageWhat::Ci
                                           : CoverageWhat::Bounds;
  return preset;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (int table : {1, 2, 4, 5}) {
    for (int cell = 1; cell <= 6; ++cell) {
      for (bool delta1 : {false, true}) {
        std::string name =
            "table" + std::to_string(table) + "-cell" + std::to_string(cell);
        if (delta1) name += "-delta1";
        names.push_back(std::move(name));
      }
    }
  }
  return names;
}

namespace {

std::string format_coverage(double v) {
  if (std::isnan(v)) return "   -  ";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%6.3f", v);
  return buf;
}

}  // namespace

std::string coverage_table_text(const std::vector<CoverageRow>& rows) {
  std::ostringstream out;
  out << "cell                                              reps  fail  bound    ci    mean interval\n";
  for (const CoverageRow& row : rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-48s %5d %5d %s %s  [%.4f, %.4f]%s\n",
                  row.label.c_str(), row.reps, row.failures,
                  format_coverage(row.bound_coverage).c_str(),
                  format_coverage(row.ci_coverage).c_str(), row.mean_lower,
                  row.mean_upper, row.failed ? "  FAILED" : "");
    out << buf;
  }
  return out.str();
}

std::string coverage_table_csv(const std::vector<CoverageRow>& rows) {
  std::ostringstream out;
  out << "cell,reps,failures,truth,bound_coverage,ci_coverage,mean_lower,mean_upper,failed\n";
  for (const CoverageRow& row : rows) {
    char buf[320];
    std::snprintf(buf, sizeof(buf), "\"%s\",%d,%d,%.10g,%.6g,%.6g,%.10g,%.10g,%d\n",
                  row.label.c_str(), row.reps, row.failures, row.truth,
                  row.bound_coverage, row.ci_coverage, row.mean_lower,
                  row.mean_upper, row.failed ? 1 : 0);
    out << buf;
  }
  return out.str();
}

}  // namespace diffbound
