#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "tobit/censored_moments.hpp"
#include "tobit/monte_carlo.hpp"

namespace tobit::cli {

namespace {

namespace fs = std::filesystem;

std::string join_doubles(const Eigen::VectorXd& v, const char* sep = " ") {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? sep : "") + format_double(v(i));
  return s;
}

// Config echo written at the top of every output file.
std::vector<std::string> echo_header(const std::string& command,
                                     const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::string> lines{"tobit " + std::string(kVersion) + " " + command};
  for (const auto& [k, v] : kv) lines.push_back(k + " = " + v);
  return lines;
}

void write_echo(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << "# " << l << '\n';
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  return out;
}

void print_matrix(std::ostream& out, const std::string& title, const Eigen::MatrixXd& m) {
  out << title << '\n';
  const Eigen::IOFormat fmt(6, 0, ", ", "\n", "  [", "]");
  out << std::fixed << std::setprecision(6) << m.format(fmt) << std::defaultfloat << '\n';
}

std::vector<std::pair<std::string, std::string>> skeleton_params_echo(const SkeletonFilterParams& p) {
  return {{"q", format_double(p.q)},
          {"r", format_double(p.r)},
          {"p0", format_double(p.p0)},
          {"c", join_doubles(p.c)},
          {"lower", join_doubles(p.lower)},
          {"upper", join_doubles(p.upper)},
          {"window", std::to_string(p.window)},
          {"order", std::to_string(p.order)}};
}

bool is_data_error(const std::exception& e) {
  return dynamic_cast<const SchemaMismatch*>(&e) || dynamic_cast<const EmptyFile*>(&e) ||
         dynamic_cast<const NonMonotoneTimestamps*>(&e);
}

}  // namespace

int cmd_oscillator(const OscillatorOptions& opt, std::ostream& out, std::ostream& err) {
  const auto& cfg = opt.config;
  const BenchmarkTable table = run_oscillator_benchmark(cfg, opt.iterations, opt.threads);
  const auto echo = echo_header(
      "oscillator", {{"seed", std::to_string(cfg.seed)},
                     {"iterations", std::to_string(opt.iterations)},
                     {"c", format_double(cfg.c)},
                     {"w", format_double(cfg.w)},
                     {"q_std", format_double(cfg.q_std)},
                     {"v_noise", format_double(cfg.v_noise)},
                     {"a", format_double(cfg.a)},
                     {"b", format_double(cfg.b)},
                     {"steps", std::to_string(cfg.steps)},
                     {"x0", join_doubles(cfg.x0)},
                     {"aborted", std::to_string(table.aborted)}});

  const fs::path dir(opt.out_dir);
  {
    auto f = open_output(dir / "table1.csv");
    write_echo(f, echo);
    f << "filter,rmse_x1,rmse_x2\n";
    for (const auto& [name, r] : table.mean_rmse) {
      f << name << ',' << format_double(r(0)) << ',' << format_double(r(1)) << '\n';
    }
  }
  {
    auto f = open_output(dir / "rmse_diff.csv");
    write_echo(f, echo);
    f << "iteration,seed,diff_x1,diff_x2\n";
    for (std::size_t i = 0; i < table.rmse_difference.size(); ++i) {
      f << i << ',' << table.seeds[i] << ',' << format_double(table.rmse_difference[i](0)) << ','
        << format_double(table.rmse_difference[i](1)) << '\n';
    }
  }

  out << "filter   rmse_x1   rmse_x2\n";
  for (const auto& [name, r] : table.mean_rmse) {
    out << std::left << std::setw(8) << name << std::right << std::fixed << std::setprecision(4)
        << std::setw(9) << r(0) << ' ' << std::setw(9) << r(1) << std::defaultfloat << '\n';
  }
  out << "aborted " << table.aborted << " of " << table.iterations << '\n';
  if (table.failed()) {
    err << "more than 5% of iterations aborted\n";
    return kTooManyAborts;
  }
  return kOk;
}

MomentsCheckResult cmd_moments_check(const MomentsCheckOptions& opt, std::ostream& out,
                                     std::ostream&) {
  MvnSpec<double> spec{opt.mean, opt.cov};
  CensorBounds<double> bounds{opt.lower, opt.upper};
  spec.validate();
  bounds.validate(spec.dim());
  const Eigen::Index n = spec.dim();

  MomentsCheckResult result;
  result.analytic = censored_moments(spec, bounds);

  // Baseline matrix for a prior whose measurement prediction is `spec` under
  // H = I and R = noise_var I.
  try {
    StateSpaceModel<double> model;
    model.A = Eigen::MatrixXd::Identity(n, n);
    model.H = Eigen::MatrixXd::Identity(n, n);
    model.Q = Eigen::MatrixXd::Zero(n, n);
    model.R = Eigen::MatrixXd::Identity(n, n) * opt.noise_var;
    const GaussianBelief<double> prior{spec.mean, spec.cov - model.R};
    const auto obs = CensoredObservation<double>::clamp(spec.mean, bounds);
    result.baseline = tkf_baseline_update(model, prior, obs, bounds).predicted_meas_cov;
  } catch (const Error&) {
    result.baseline.reset();
  }

  result.oracle = mc_censored_oracle(spec, bounds, opt.samples, opt.reps, opt.seed);
  const auto ratio = [](double diff, double se) {
    if (se > 0.0) return std::abs(diff) / se;
    return std::abs(diff) > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    result.worst_mean_ratio =
        std::max(result.worst_mean_ratio, ratio(result.analytic.mean(i) - result.oracle.moments.mean(i),
                                                result.oracle.mean_se(i)));
    for (Eigen::Index j = 0; j < n; ++j) {
      result.worst_cov_ratio = std::max(
          result.worst_cov_ratio, ratio(result.analytic.cov(i, j) - result.oracle.moments.cov(i, j),
                                        result.oracle.cov_se(i, j)));
    }
  }

  write_echo(out, echo_header("moments-check",
                              {{"seed", std::to_string(opt.seed)},
                               {"mean", join_doubles(spec.mean)},
                               {"cov", join_doubles(spec.cov.reshaped<Eigen::RowMajor>())},
                               {"lower", join_doubles(bounds.lower)},
                               {"upper", join_doubles(bounds.upper)},
                               {"noise_var", format_double(opt.noise_var)},
                               {"samples", std::to_string(opt.samples)},
                               {"reps", std::to_string(opt.reps)}}));
  print_matrix(out, "analytic censored mean", result.analytic.mean.transpose());
  print_matrix(out, "analytic censored covariance", result.analytic.cov);
  if (result.baseline) {
    print_matrix(out, "baseline covariance", *result.baseline);
  } else {
    out << "baseline covariance\n  n/a (covariance minus noise_var I is not a valid prior)\n";
  }
  print_matrix(out, "monte carlo mean", result.oracle.moments.mean.transpose());
  print_matrix(out, "monte carlo covariance", result.oracle.moments.cov);
  print_matrix(out, "monte carlo covariance standard error", result.oracle.cov_se);
  out << "max |analytic - mc| mean: "
      << format_double((result.analytic.mean - result.oracle.moments.mean).cwiseAbs().maxCoeff())
      << "  (" << format_double(result.worst_mean_ratio) << " SE)\n";
  out << "max |analytic - mc| covariance: "
      << format_double((result.analytic.cov - result.oracle.moments.cov).cwiseAbs().maxCoeff())
      << "  (" << format_double(result.worst_cov_ratio) << " SE)\n";
  if (result.baseline) {
    out << "max |baseline - analytic| covariance: "
        << format_double((*result.baseline - result.analytic.cov).cwiseAbs().maxCoeff()) << '\n';
  }
  const bool ok = result.worst_mean_ratio < opt.max_se && result.worst_cov_ratio < opt.max_se;
  out << (ok ? "agreement within " : "DEVIATION beyond ") << format_double(opt.max_se) << " SE\n";
  result.exit_code = ok ? kOk : kNumericalFailure;
  return result;
}

int cmd_filter(const FilterOptions& opt, std::ostream& out, std::ostream& err) {
  const ParseReport parsed = parse_skeleton_csv(opt.input);
  for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';
  const SkeletonFrameSet filtered = filter_skeleton(parsed.frames, opt.method, opt.params);

  auto kv = skeleton_params_echo(opt.params);
  kv.insert(kv.begin(), {{"seed", std::to_string(opt.seed)},
                         {"input", opt.input},
                         {"method", std::string(method_name(opt.method))},
                         {"rejected_rows", std::to_string(parsed.rejected_lines.size())}});
  const auto echo = echo_header("filter", kv);

  const fs::path dir(opt.out_dir);
  const fs::path output = opt.output.empty()
                              ? dir / ("filtered_" + std::string(method_name(opt.method)) + ".csv")
                              : fs::path(opt.output);
  {
    auto f = open_output(output);
    write_skeleton_csv(f, filtered, echo);
  }
  double overall = 0.0;
  {
    auto f = open_output(dir / "metrics.csv");
    write_echo(f, echo);
    f << "joint,m_x,m_y,m_z\n";
    for (std::size_t j = 0; j < filtered.joints.size(); ++j) {
      const Eigen::VectorXd m = smoothness_metric(filtered.joints[j].channels);
      f << filtered.joint_names[j] << ',' << format_double(m(0)) << ',' << format_double(m(1))
        << ',' << format_double(m(2)) << '\n';
    }
    overall = overall_smoothness(filtered);
    f << "overall_M," << format_double(overall) << ",,\n";
  }
  out << "frames " << filtered.frames() << ", method " << method_name(opt.method)
      << ", overall M " << format_double(overall) << '\n';
  out << "wrote " << output.string() << " and " << (dir / "metrics.csv").string() << '\n';
  return kOk;
}

double skeleton_loglik(const SkeletonFrameSet& frames, const std::vector<std::size_t>& joints,
                       const SkeletonFilterParams& params, LikelihoodVariant variant, double q) {
  SkeletonFilterParams p = params;
  p.q = q;
  const auto model = p.model();
  const std::vector<CensorBounds<double>> bounds{p.device_bounds()};
  double total = 0.0;
  for (std::size_t j : joints) {
    const auto& series = frames.joints.at(j);
    const GaussianBelief<double> initial{series.channels.row(0).transpose(),
                                         Eigen::Matrix3d::Identity() * p.p0};
    total += censored_loglik(model, series, bounds, variant, initial, 1).loglik;
  }
  return total;
}

EstimateQResult cmd_estimate_q(const EstimateQOptions& opt, std::ostream& out, std::ostream& err) {
  const ParseReport parsed = parse_skeleton_csv(opt.input);
  for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';
  const auto& frames = parsed.frames;

  std::vector<std::size_t> joints;
  if (opt.joints.empty()) {
    for (std::size_t j = 0; j < frames.joints.size(); ++j) joints.push_back(j);
  } else {
    for (const auto& name : opt.joints) {
      const auto it = std::find(frames.joint_names.begin(), frames.joint_names.end(), name);
      if (it == frames.joint_names.end()) throw InvalidArgument("unknown joint '" + name + "'");
      joints.push_back(static_cast<std::size_t>(it - frames.joint_names.begin()));
    }
  }
  std::vector<double> grid = opt.grid;
  if (grid.empty()) {
    for (int i = 0; i < 25; ++i) grid.push_back(std::pow(10.0, -5.0 + 4.0 * i / 24.0));
  }
  validate_q_grid(grid);

  const auto f = [&](double q) { return skeleton_loglik(frames, joints, opt.params, opt.variant, q); };
  EstimateQResult result;
  result.profile = profile_grid(f, grid);
  try {
    result.q = refine_maximum(f, result.profile);
  } catch (const NoInteriorMaximum& e) {
    err << e.what() << '\n';
    result.exit_code = kBoundaryOptimum;
  }

  auto kv = skeleton_params_echo(opt.params);
  kv.erase(kv.begin());
  std::string joint_list;
  for (std::size_t j : joints) joint_list += (joint_list.empty() ? "" : " ") + frames.joint_names[j];
  kv.insert(kv.begin(), {{"seed", std::to_string(opt.seed)},
                         {"input", opt.input},
                         {"variant", opt.variant == LikelihoodVariant::Corrected ? "corrected" : "baseline"},
                         {"joints", joint_list}});
  const auto echo = echo_header("estimate-q", kv);

  std::ostringstream csv;
  write_echo(csv, echo);
  csv << "q,loglik\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv << format_double(grid[i]) << ',' << format_double(result.profile.loglik[i]) << '\n';
  }
  {
    auto file = open_output(fs::path(opt.out_dir) / "q_profile.csv");
    file << csv.str();
  }
  out << csv.str();
  if (result.q) {
    out << "q_estimate," << format_double(*result.q) << '\n';
  } else {
    out << "q_estimate,boundary:" << format_double(grid[result.profile.best_index]) << '\n';
  }
  return result;
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
  const ParseReport test = parse_skeleton_csv(opt.test);
  const ParseReport reference = parse_skeleton_csv(opt.reference);
  for (const auto& w : test.warnings) err << "warning (test): " << w << '\n';
  for (const auto& w : reference.warnings) err << "warning (reference): " << w << '\n';
  const LagEvaluation eval =
      evaluate_against_reference(test.frames, reference.frames, opt.lag_min, opt.lag_max);

  const auto echo = echo_header("evaluate", {{"seed", std::to_string(opt.seed)},
                                             {"test", opt.test},
                                             {"reference", opt.reference},
                                             {"lag_min", std::to_string(opt.lag_min)},
                                             {"lag_max", std::to_string(opt.lag_max)}});
  const fs::path dir(opt.out_dir);
  {
    auto f = open_output(dir / "evaluation.csv");
    write_echo(f, echo);
    f << "joint,channel,rmse,lag\n";
    for (const auto& r : eval.rows) {
      f << r.joint << ',' << r.channel << ',' << format_double(r.rmse) << ',' << r.lag << '\n';
    }
  }
  {
    auto f = open_output(dir / "lag_profile.csv");
    write_echo(f, echo);
    f << "lag,mean_rmse\n";
    for (const auto& [lag, m] : eval.mean_rmse_by_lag) f << lag << ',' << format_double(m) << '\n';
  }
  out << "best lag " << eval.best_lag << '\n';
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Censored-measurement Kalman filtering experiments", "tobit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
  };

  // oscillator
  OscillatorOptions osc;
  auto* s_osc = app.add_subcommand("oscillator", "saturated oscillator benchmark (TKF vs TKFc)");
  add_common(s_osc);
  s_osc->add_option("--iterations", osc.iterations)->capture_default_str()->check(CLI::PositiveNumber);
  s_osc->add_option("--threads", osc.threads, "0 = hardware concurrency")->capture_default_str();
  s_osc->add_option("--a", osc.config.a, "lower limit")->capture_default_str();
  s_osc->add_option("--b", osc.config.b, "upper limit")->capture_default_str();
  s_osc->add_option("--c", osc.config.c, "damping")->capture_default_str();
  s_osc->add_option("--w", osc.config.w, "angular step")->capture_default_str();
  s_osc->add_option("--q-std", osc.config.q_std, "process noise standard deviation")->capture_default_str();
  s_osc->add_option("--v-noise", osc.config.v_noise, "measurement noise variance")->capture_default_str();
  s_osc->add_option("--steps", osc.config.steps)->capture_default_str()->check(CLI::PositiveNumber);

  // moments-check
  int dim = 0;
  std::vector<double> mean, cov, lower, upper, bounds;
  double var = 0.0;
  MomentsCheckOptions mc;
  auto* s_mom = app.add_subcommand("moments-check", "analytic vs Monte Carlo censored moments");
  add_common(s_mom);
  s_mom->add_option("--dim", dim, "dimension (default: worked 3-d example)");
  s_mom->add_option("--mean", mean)->delimiter(',');
  auto* cov_opt = s_mom->add_option("--cov", cov, "row-major covariance")->delimiter(',');
  s_mom->add_option("--var", var, "variance for --dim 1")->excludes(cov_opt);
  auto* lower_opt = s_mom->add_option("--lower", lower)->delimiter(',');
  auto* upper_opt = s_mom->add_option("--upper", upper)->delimiter(',');
  s_mom->add_option("--bounds", bounds, "same lo hi for every component")
      ->expected(2)
      ->excludes(lower_opt)
      ->excludes(upper_opt);
  s_mom->add_option("--noise-var", mc.noise_var, "R = noise_var I for the baseline matrix")
      ->capture_default_str();
  s_mom->add_option("--samples", mc.samples)->capture_default_str()->check(CLI::PositiveNumber);
  s_mom->add_option("--reps", mc.reps)->capture_default_str()->check(CLI::PositiveNumber);
  s_mom->add_option("--max-se", mc.max_se, "allowed deviation in standard errors")->capture_default_str();

  // filter
  FilterOptions flt;
  std::string method = "atkf";
  std::vector<double> c_vec, lower3, upper3;
  auto* s_flt = app.add_subcommand("filter", "filter a skeleton CSV");
  add_common(s_flt);
  s_flt->add_option("--input", flt.input)->required()->check(CLI::ExistingFile);
  s_flt->add_option("--output", flt.output, "output CSV (default <out-dir>/filtered_<method>.csv)");
  s_flt->add_option("--method", method)
      ->check(CLI::IsMember({"raw", "sgf", "kf", "tkf", "tkfc", "atkf"}))
      ->capture_default_str();
  const auto add_skeleton_params = [&](CLI::App* sub, SkeletonFilterParams& p) {
    sub->add_option("--q", p.q, "process noise variance")->capture_default_str();
    sub->add_option("--r", p.r, "measurement noise variance")->capture_default_str();
    sub->add_option("--p0", p.p0, "initial covariance scale")->capture_default_str();
    sub->add_option("--c", c_vec, "ATKF offsets (3 values)")->expected(3)->delimiter(',');
    sub->add_option("--device-lower", lower3, "device lower limits (3 values)")->expected(3)->delimiter(',');
    sub->add_option("--device-upper", upper3, "device upper limits (3 values)")->expected(3)->delimiter(',');
    sub->add_option("--window", p.window, "Savitzky-Golay window (odd)")->capture_default_str();
    sub->add_option("--order", p.order, "Savitzky-Golay polynomial order")->capture_default_str();
  };
  add_skeleton_params(s_flt, flt.params);

  // estimate-q
  EstimateQOptions est;
  std::string variant = "tkfc";
  auto* s_est = app.add_subcommand("estimate-q", "maximum likelihood q for Q = q I");
  add_common(s_est);
  s_est->add_option("--input", est.input)->required()->check(CLI::ExistingFile);
  s_est->add_option("--variant", variant, "likelihood of tkfc (corrected) or tkf (baseline)")
      ->check(CLI::IsMember({"tkfc", "tkf"}))
      ->capture_default_str();
  std::vector<std::string> joint_names(kKinectJoints.begin(), kKinectJoints.end());
  s_est->add_option("--joint", est.joints, "joints to use (default all)")
      ->delimiter(',')
      ->check(CLI::IsMember(joint_names));
  s_est->add_option("--grid", est.grid, "increasing positive q grid")->delimiter(',');
  add_skeleton_params(s_est, est.params);

  // evaluate
  EvaluateOptions ev;
  auto* s_ev = app.add_subcommand("evaluate", "positional RMSE against a reference recording");
  add_common(s_ev);
  s_ev->add_option("--test", ev.test)->required()->check(CLI::ExistingFile);
  s_ev->add_option("--reference", ev.reference)->required()->check(CLI::ExistingFile);
  s_ev->add_option("--lag-min", ev.lag_min)->capture_default_str();
  s_ev->add_option("--lag-max", ev.lag_max)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const auto usage = [&](const std::string& msg) {
    err << "usage error: " << msg << '\n';
    return kUsage;
  };
  const auto apply_skeleton_overrides = [&](SkeletonFilterParams& p) {
    if (!c_vec.empty()) p.c = Eigen::Vector3d(c_vec[0], c_vec[1], c_vec[2]);
    if (!lower3.empty()) p.lower = Eigen::Vector3d(lower3[0], lower3[1], lower3[2]);
    if (!upper3.empty()) p.upper = Eigen::Vector3d(upper3[0], upper3[1], upper3[2]);
    if ((p.c.array() <= 0.0).any()) return std::string("--c entries must be positive");
    if (!(p.lower.array() < p.upper.array()).all()) return std::string("device limits need lower < upper");
    if (!(p.q > 0.0) || !(p.r > 0.0) || !(p.p0 > 0.0)) return std::string("--q, --r, --p0 must be positive");
    if (p.window < 1 || p.window % 2 == 0) return std::string("--window must be a positive odd integer");
    if (p.order < 0 || p.order >= p.window) return std::string("--order must satisfy 0 <= order < window");
    return std::string();
  };

  try {
    if (s_osc->parsed()) {
      osc.config.seed = seed;
      osc.out_dir = out_dir;
      if (!(osc.config.a < osc.config.b)) return usage("--a must be smaller than --b");
      if (!(osc.config.q_std > 0.0)) return usage("--q-std must be positive");
      if (osc.config.v_noise < 0.0) return usage("--v-noise must be nonnegative");
      return cmd_oscillator(osc, out, err);
    }
    if (s_mom->parsed()) {
      mc.seed = seed;
      const bool custom = dim != 0 || !mean.empty() || !cov.empty() || var != 0.0;
      if (custom) {
        const auto n = static_cast<std::size_t>(dim > 0 ? dim : static_cast<int>(mean.size()));
        if (n == 0) return usage("--dim or --mean is required");
        if (mean.size() != n) return usage("--mean needs " + std::to_string(n) + " values");
        mc.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(n));
        if (!cov.empty()) {
          if (cov.size() != n * n) return usage("--cov needs dim*dim values");
          mc.cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
              cov.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        } else if (n == 1 && var > 0.0) {
          mc.cov = Eigen::MatrixXd::Constant(1, 1, var);
        } else {
          return usage("--cov (or --var for --dim 1) is required");
        }
      }
      const auto n = mc.mean.size();
      if (!bounds.empty()) {
        mc.lower = Eigen::VectorXd::Constant(n, bounds[0]);
        mc.upper = Eigen::VectorXd::Constant(n, bounds[1]);
      } else if (!lower.empty() || !upper.empty()) {
        mc.lower = lower.empty() ? Eigen::VectorXd::Constant(n, -kInf<double>)
                                 : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                       lower.data(), static_cast<Eigen::Index>(lower.size())));
        mc.upper = upper.empty() ? Eigen::VectorXd::Constant(n, kInf<double>)
                                 : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                       upper.data(), static_cast<Eigen::Index>(upper.size())));
      } else if (custom) {
        mc.lower = Eigen::VectorXd::Constant(n, -kInf<double>);
        mc.upper = Eigen::VectorXd::Constant(n, kInf<double>);
      }
      if (mc.lower.size() != n || mc.upper.size() != n) return usage("bounds need one value per component");
      if (!(mc.lower.array() < mc.upper.array()).all()) return usage("bounds need lower < upper");
      try {
        MvnSpec<double>{mc.mean, mc.cov}.validate();
      } catch (const InvalidArgument& e) {
        return usage(e.what());
      }
      return cmd_moments_check(mc, out, err).exit_code;
    }
    if (s_flt->parsed()) {
      flt.seed = seed;
      flt.out_dir = out_dir;
      flt.method = parse_method(method);
      if (const auto msg = apply_skeleton_overrides(flt.params); !msg.empty()) return usage(msg);
      return cmd_filter(flt, out, err);
    }
    if (s_est->parsed()) {
      est.seed = seed;
      est.out_dir = out_dir;
      est.variant = variant == "tkfc" ? LikelihoodVariant::Corrected : LikelihoodVariant::Baseline;
      if (const auto msg = apply_skeleton_overrides(est.params); !msg.empty()) return usage(msg);
      try {
        validate_q_grid(est.grid.empty() ? std::vector<double>{1.0} : est.grid);
      } catch (const InvalidArgument& e) {
        return usage(e.what());
      }
      return cmd_estimate_q(est, out, err).exit_code;
    }
    if (s_ev->parsed()) {
      ev.seed = seed;
      ev.out_dir = out_dir;
      if (ev.lag_min > ev.lag_max) return usage("--lag-min must not exceed --lag-max");
      return cmd_evaluate(ev, out, err);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return is_data_error(e) ? kDataFormat : kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"tobit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tobit::cli
