// Command-line front end: estimate differential-effect bounds on the average
// or conditional treatment effect from a CSV file, run the factorial coverage
// study, or fit the two-parameter logistic diagnostics.
//
// Exit codes: 0 success, 1 computation error, 2 usage error.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "diffbound/cate_bounds.hpp"
#include "diffbound/dataset.hpp"
#include "diffbound/irt.hpp"
#include "diffbound/kernel.hpp"
#include "diffbound/moment_inference.hpp"
#include "diffbound/propensity.hpp"
#include "diffbound/report.hpp"
#include "diffbound/sim.hpp"

namespace {

using namespace diffbound;

struct CommonFlags {
  std::string input;
  std::string y = "y", z1 = "z1", z2 = "z2";
  std::string x_list;
  std::string direction;
  std::string estimator2 = "ipw";
  double alpha = 0.05;
  double beta = 0.005;
  int n_boot = 1000;
  std::uint64_t seed = 0;
  double ridge = 0.0;
  bool drop_missing = false;
  std::string out;
  bool pretty = false;
};

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> items;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

Direction parse_direction(const std::string& name) {
  if (name == "mu1-upper") return Direction::Mu1Upper;
  if (name == "mu2-upper") return Direction::Mu2Upper;
  if (name == "point") return Direction::Point;
  throw CLI::ValidationError("--direction",
                             "must be mu1-upper, mu2-upper, or point");
}

Estimator2 parse_estimator2(const std::string& name) {
  if (name == "ipw") return Estimator2::Ipw;
  if (name == "aipw") return Estimator2::Aipw;
  throw CLI::ValidationError("--estimator2", "must be ipw or aipw");
}

KernelKind parse_kernel(const std::string& name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  if (name == "epanechnikov") return KernelKind::Epanechnikov;
  throw CLI::ValidationError("--kernel", "must be gaussian or epanechnikov");
}

std::string now_string() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write file: " + out_path);
  out << text;
}

void emit_report(const AnalysisReport& report, const CommonFlags& flags) {
  emit(flags.pretty ? to_text(report) : to_json_string(report), flags.out);
}

// Current pipeline stage, reported with any computation error.
struct Stage {
  std::string name;
  void operator=(const char* s) { name = s; }
};

int run_guarded(Stage& stage, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error [" << stage.name << "]: " << e.what() << "\n";
    return 1;
  }
}

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool with_estimator) {
  cmd->add_option("--input", flags.input, "input CSV file")->required();
  cmd->add_option("--y", flags.y, "outcome column name");
  cmd->add_option("--z1", flags.z1, "treatment-of-interest column name");
  cmd->add_option("--z2", flags.z2, "second-treatment column name");
  cmd->add_option("--x", flags.x_list, "comma-separated covariate columns")
      ->required();
  cmd->add_option("--direction", flags.direction,
                  "bound direction: mu1-upper, mu2-upper, or point")
      ->required();
  if (with_estimator) {
    cmd->add_option("--estimator2", flags.estimator2,
                    "second estimator: ipw (default) or aipw");
  }
  cmd->add_option("--alpha", flags.alpha, "test level (default 0.05)");
  cmd->add_option("--beta", flags.beta,
                  "first-stage level of the two-step test (default 0.005)");
  cmd->add_option("--boot", flags.n_boot, "bootstrap replicates (default 1000)");
  cmd->add_option("--seed", flags.seed, "master seed (default 0)");
  cmd->add_option("--ridge", flags.ridge,
                  "ridge penalty for ill-conditioned propensity designs "
                  "(default 0, off)");
  cmd->add_flag("--drop-missing", flags.drop_missing,
                "skip rows with empty cells instead of rejecting the file");
  cmd->add_option("--out", flags.out, "write the report to this file");
  cmd->add_flag("--pretty", flags.pretty, "plain-text report instead of JSON");
}

struct Pipeline {
  Dataset data;
  PropensityModel model;
  AnalysisReport report;
};

Pipeline common_pipeline(const CommonFlags& flags, Stage& stage) {
  stage = "load";
  CsvSchema schema;
  schema.y = flags.y;
  schema.z1 = flags.z1;
  schema.z2 = flags.z2;
  schema.x = split_list(flags.x_list);
  Dataset data = load_csv(flags.input, schema, flags.drop_missing);

  stage = "validate";
  AnalysisReport report;
  report.validation = validate(data);
  report.cells = cell_counts(data);
  if (!report.validation.ok) {
    std::string detail;
    for (const auto& m : report.validation.messages) {
      if (m.severity == Severity::Error) detail += m.text + "; ";
    }
    throw Error("dataset failed validation: " + detail +
                "fix the input or drop the offending rows");
  }

  stage = "fit-propensity";
  LogisticOptions logistic;
  logistic.ridge = flags.ridge;
  PropensityModel model = fit_logistic(data, logistic);
  stage = "positivity";
  report.positivity = check_positivity(model, data);
  report.seed = flags.seed;
  report.timestamp = now_string();
  return {std::move(data), std::move(model), std::move(report)};
}

int cmd_ate(const CommonFlags& flags) {
  Stage stage{"start"};
  return run_guarded(stage, [&] {
    Pipeline p = common_pipeline(flags, stage);
    const Dataset& data = p.data;
    const PropensityModel& model = p.model;
    AnalysisReport& report = p.report;
    const Direction direction = parse_direction(flags.direction);
    const Estimator2 est2 = parse_estimator2(flags.estimator2);

    stage = "bounds";
    std::optional<OutcomeModel> outcome;
    if (est2 == Estimator2::Aipw) outcome = fit_outcome_regression(data);
    report.ate = ate_bounds(data, model, direction, est2,
                            outcome ? &*outcome : nullptr);
    if (report.ate->crossed) {
      report.warnings.push_back(
          "bounds crossed under the assumed direction; interval was "
          "order-corrected");
    }

    stage = "bootstrap";
    BootstrapConfig boot;
    boot.estimator2 = est2;
    boot.logistic.ridge = flags.ridge;
    const BootstrapDraws draws =
        bootstrap_estimates(data, boot, flags.n_boot, flags.seed);
    stage = "region";
    report.region = confidence_region(draws, flags.alpha, flags.beta, direction);
    if (!report.region->contiguous) {
      report.warnings.push_back(
          "accepted tau set was non-contiguous; reporting its hull");
    }
    stage = "report";
    emit_report(report, flags);
  });
}

struct CateFlags {
  double x0 = 0.0;
  int cov_index = 0;
  std::string kernel = "gaussian";
  double bandwidth = 0.0;
  std::string cv_grid;
  bool weighted_phi_variance = false;
};

int cmd_cate(const CommonFlags& flags, const CateFlags& cate) {
  Stage stage{"start"};
  return run_guarded(stage, [&] {
    Pipeline p = common_pipeline(flags, stage);
    const Dataset& data = p.data;
    const PropensityModel& model = p.model;
    AnalysisReport& report = p.report;
    const Direction direction = parse_direction(flags.direction);
    const KernelKind kind = parse_kernel(cate.kernel);
    if (cate.cov_index < 0 || cate.cov_index >= data.n_covariates()) {
      throw Error("--cov-index out of range");
    }

    stage = "bandwidth";
    CateKernels kernels;
    kernels.k1.kind = kernels.k2.kind = kernels.k3.kind = kind;
    if (cate.bandwidth > 0.0) {
      kernels.k1.bandwidth = kernels.k2.bandwidth = kernels.k3.bandwidth =
          cate.bandwidth;
    } else {
      const Eigen::VectorXd xc = data.x().col(cate.cov_index);
      std::vector<double> grid;
      if (!cate.cv_grid.empty()) {
        for (const auto& tok : split_list(cate.cv_grid)) {
          grid.push_back(std::stod(tok));
        }
      } else {
        grid = default_bandwidth_grid(xc);
      }
      const auto rows10 = cell_rows(data, 1, 0);
      const auto rows01 = cell_rows(data, 0, 1);
      auto take = [&](const std::vector<Eigen::Index>& rows,
                      const Eigen::VectorXd& v) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
          out[static_cast<Eigen::Index>(k)] = v[rows[k]];
        }
        return out;
      };
      kernels.k1.bandwidth =
          select_bandwidth_cv(take(rows10, xc), take(rows10, data.y()), kind, grid);
      kernels.k2.bandwidth =
          select_bandwidth_cv(take(rows01, xc), take(rows01, data.y()), kind, grid);
      kernels.k3.bandwidth =
          select_bandwidth_cv(xc, ipw_summands(data, model), kind, grid);
    }

    stage = "bounds";
    report.cate = cate_bounds(data, model, cate.x0, kernels, cate.cov_index,
                              direction, cate.weighted_phi_variance);
    if (report.cate->crossed) {
      report.warnings.push_back(
          "bounds crossed under the assumed direction; interval was "
          "order-corrected");
    }

    stage = "bootstrap";
    BootstrapConfig boot;
    boot.cate = CateQuery{cate.x0, cate.cov_index, kernels};
    boot.logistic.ridge = flags.ridge;
    const BootstrapDraws draws =
        bootstrap_estimates(data, boot, flags.n_boot, flags.seed);
    stage = "region";
    report.region = confidence_region(draws, flags.alpha, flags.beta, direction);
    if (!report.region->contiguous) {
      report.warnings.push_back(
          "accepted tau set was non-contiguous; reporting its hull");
    }
    stage = "report";
    emit_report(report, flags);
  });
}

struct SimulateFlags {
  std::string preset;
  bool list_presets = false;
  int reps = 200;
  int n_boot = 500;
  double alpha = 0.05;
  double beta = 0.005;
  std::uint64_t seed = 0;
  std::string direction = "mu2-upper";
  std::string out;
};

int cmd_simulate(const SimulateFlags& flags) {
  if (flags.list_presets) {
    for (const auto& name : preset_names()) std::cout << name << "\n";
    return 0;
  }
  Preset preset;
  try {
    if (flags.preset.empty()) {
      throw Error("--preset is required (or use --list-presets)");
    }
    preset = preset_cell(flags.preset);
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  Stage stage{"simulate"};
  return run_guarded(stage, [&] {
    CoverageOptions options;
    options.reps = flags.reps;
    options.n_boot = flags.n_boot;
    options.alpha = flags.alpha;
    options.beta = flags.beta;
    options.target = preset.target;
    options.what = preset.what;
    options.direction = parse_direction(flags.direction);
    options.seed = flags.seed;
    const auto rows = coverage_study({preset.config}, options);
    std::cout << coverage_table_text(rows);
    if (!flags.out.empty()) emit(coverage_table_csv(rows), flags.out);
  });
}

struct IrtFlags {
  std::string input;
  std::string items;
  std::string treat_item;
  std::string second_item;
  bool outcome_monotone = false;
  std::string out;
  bool pretty = false;
};

int cmd_irt(const IrtFlags& flags) {
  Stage stage{"irt"};
  return run_guarded(stage, [&] {
    stage = "load";
    const auto columns = split_list(flags.items);
    const Eigen::MatrixXi items = load_binary_items(flags.input, columns);

    stage = "fit-2pl";
    const IrtFit fit = fit_2pl(items);

    std::ostringstream text;
    text << "two-parameter logistic fit (" << items.rows() << " rows, "
         << items.cols() << " items, log-likelihood "
         << fit.log_likelihood << ", "
         << (fit.converged ? "converged" : "NOT converged") << ")\n";
    text << "item                      discrimination   std. error   difficulty   std. error\n";
    nlohmann::json jitems = nlohmann::json::array();
    for (Eigen::Index j = 0; j < items.cols(); ++j) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%-24s %14.4f %12.4f %12.4f %12.4f\n",
                    columns[static_cast<std::size_t>(j)].c_str(),
                    fit.discriminations[j], fit.se_discriminations[j],
                    fit.difficulties[j], fit.se_difficulties[j]);
      text << buf;
      jitems.push_back({{"item", columns[static_cast<std::size_t>(j)]},
                        {"discrimination", fit.discriminations[j]},
                        {"se_discrimination", fit.se_discriminations[j]},
                        {"difficulty", fit.difficulties[j]},
                        {"se_difficulty", fit.se_difficulties[j]}});
    }
    nlohmann::json out;
    out["items"] = jitems;
    out["log_likelihood"] = fit.log_likelihood;
    out["converged"] = fit.converged;

    if (!flags.treat_item.empty() && !flags.second_item.empty()) {
      stage = "monotonicity";
      auto index_of = [&](const std::string& name) {
        for (std::size_t k = 0; k < columns.size(); ++k) {
          if (columns[k] == name) return static_cast<int>(k);
        }
        throw Error("item column '" + name + "' not in --items");
      };
      const DirectionSuggestion suggestion =
          monotonicity_check(fit, index_of(flags.treat_item),
                             index_of(flags.second_item), flags.outcome_monotone);
      text << "direction suggestion: "
           << (suggestion.direction ? direction_name(*suggestion.direction)
                                    : "inconclusive")
           << " [" << suggestion.case_label << "]\n"
           << "  " << suggestion.rationale << "\n";
      out["suggestion"] = {
          {"direction", suggestion.direction
                            ? direction_name(*suggestion.direction)
                            : "inconclusive"},
          {"case", suggestion.case_label},
          {"rationale", suggestion.rationale}};
    }
    emit(flags.pretty ? text.str() : out.dump(2) + "\n", flags.out);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differential-effect bounds for treatment effects"};
  app.require_subcommand(1);

  CommonFlags ate_flags;
  CLI::App* ate = app.add_subcommand("ate", "bounds and confidence region for the average effect");
  add_common_flags(ate, ate_flags, true);

  CommonFlags cate_common;
  CateFlags cate_flags;
  CLI::App* cate = app.add_subcommand("cate", "bounds and confidence region for the conditional effect");
  add_common_flags(cate, cate_common, false);
  cate->add_option("--x0", cate_flags.x0, "query point on the conditioning covariate")->required();
  cate->add_option("--cov-index", cate_flags.cov_index,
                   "0-based index of the conditioning covariate (default 0)");
  cate->add_option("--kernel", cate_flags.kernel,
                   "kernel: gaussian (default) or epanechnikov");
  cate->add_option("--bandwidth", cate_flags.bandwidth,
                   "fixed bandwidth for all three kernels (skips cross-validation)");
  cate->add_option("--cv-grid", cate_flags.cv_grid,
                   "comma-separated bandwidth grid for cross-validation");
  cate->add_flag("--weighted-phi-variance", cate_flags.weighted_phi_variance,
                 "use the kernel-weighted variant of the weighting-term variance");

  SimulateFlags sim_flags;
  CLI::App* simulate = app.add_subcommand("simulate", "factorial coverage study");
  simulate->add_option("--preset", sim_flags.preset, "coverage cell, e.g. table1-cell1");
  simulate->add_flag("--list-presets", sim_flags.list_presets, "list preset names");
  simulate->add_option("--reps", sim_flags.reps, "replications per cell (default 200)");
  simulate->add_option("--boot", sim_flags.n_boot, "bootstrap replicates (default 500)");
  simulate->add_option("--alpha", sim_flags.alpha, "test level (default 0.05)");
  simulate->add_option("--beta", sim_flags.beta, "first-stage level (default 0.005)");
  simulate->add_option("--seed", sim_flags.seed, "master seed (default 0)");
  simulate->add_option("--direction", sim_flags.direction,
                       "bound direction used by the study (default mu2-upper)");
  simulate->add_option("--out", sim_flags.out, "write the coverage table CSV here");

  IrtFlags irt_flags;
  CLI::App* irt = app.add_subcommand("irt", "two-parameter logistic diagnostics");
  irt->add_option("--input", irt_flags.input, "input CSV file")->required();
  irt->add_option("--items", irt_flags.items, "comma-separated binary item columns")->required();
  irt->add_option("--treat-item", irt_flags.treat_item,
                  "item column of the treatment of interest");
  irt->add_option("--second-item", irt_flags.second_item,
                  "item column of the second treatment");
  irt->add_flag("--outcome-monotone", irt_flags.outcome_monotone,
                "attest that the expected outcome is non-decreasing in the "
                "latent trait and the treatment");
  irt->add_option("--out", irt_flags.out, "write the report to this file");
  irt->add_flag("--pretty", irt_flags.pretty, "plain-text report instead of JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (app.got_subcommand(ate)) return cmd_ate(ate_flags);
  if (app.got_subcommand(cate)) return cmd_cate(cate_common, cate_flags);
  if (app.got_subcommand(simulate)) return cmd_simulate(sim_flags);
  if (app.got_subcommand(irt)) return cmd_irt(irt_flags);
  return 2;
}
