// Command-line front end: benchmark runners plus two small inspection tools.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "agnc/adaptive_fit.hpp"
#include "agnc/errors.hpp"
#include "agnc/experiments/config.hpp"
#include "agnc/loss.hpp"

namespace {

using namespace agnc;

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::string methods;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, const std::string& default_out) {
  f.out = default_out;
  cmd->add_option("--config", f.config, "key = value config file (defaults when omitted)");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--methods", f.methods, "comma-separated method list, e.g. Welsch,GNC-AMB");
}

KeyValueConfig read_config(const RunFlags& f) {
  if (f.config.empty()) return {"<defaults>", {}};
  return KeyValueConfig::load(f.config);
}

template <typename Config>
void override_common(Config& cfg, const RunFlags& f) {
  if (f.seed) cfg.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.methods.empty()) cfg.methods = parse_method_list(f.methods);
  cfg.validate();
}

void print_summary(const ExperimentReport& report) {
  for (const SummaryRow& s : report.summarize()) {
    fmt::print("{:<20} {:<8} {:<8} p50 {:<12.6g} p75 {:<12.6g} success {:.2f}\n", s.condition,
               s.method, s.metric, s.p50, s.p75, s.success_rate);
  }
}

int run_linreg(const RunFlags& f) {
  LinRegConfig cfg = linreg_config(read_config(f));
  override_common(cfg, f);
  const ExperimentReport report = run_linreg_mc(cfg);
  report.write(f.out);
  print_summary(report);
  fmt::print("wrote {}/rows.csv, summary.csv, stages.csv\n", f.out);
  return 0;
}

int run_icp(const RunFlags& f) {
  IcpBenchConfig cfg = icp_config(read_config(f));
  override_common(cfg, f);
  const ExperimentReport report = run_icp_bench(cfg);
  report.write(f.out);
  print_summary(report);
  fmt::print("wrote {}/rows.csv, summary.csv, stages.csv\n", f.out);
  return 0;
}

struct FitFlags {
  std::string file;
  int dim = 3;
  double tau = 5.0;
  int bins = 100;
  bool all_residuals = false;
};

std::vector<double> read_residuals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open residual file {}", path));
  std::vector<double> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || line.find_first_not_of(" \t\r", used) != std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected one number per line", path, number));
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(fmt::format("{}: no residuals", path));
  return out;
}

int run_fitloss(const FitFlags& f) {
  const ResidualSet set{read_residuals(f.file), f.dim};
  AlphaSearchConfig alpha;
  alpha.tau = f.tau;
  alpha.validate();
  const EmpiricalDensity q = f.all_residuals ? estimate_density(set, f.bins)
                                             : estimate_density_within(set, f.bins, f.tau);
  const MbFit mb = fit_mb(q, f.dim, f.tau);
  const ShapeParameter plain = select_alpha(set, alpha);
  const ModeShiftedAlpha shifted = select_alpha_modeshifted(set, mb.mode, alpha);
  fmt::print("residuals {}\n", set.values.size());
  fmt::print("a_star {}\n", mb.a_star);
  fmt::print("mode {}\n", mb.mode);
  fmt::print("alpha_star {}\n", plain.to_string());
  fmt::print("alpha_star_mode_shifted {}\n", shifted.alpha.to_string());
  return 0;
}

struct CurveFlags {
  std::vector<std::string> kernels{"adaptive"};
  std::string alpha = "2";
  double scale = 1.0;
  double mode = 0.0;
  double max_eps = 5.0;
  int samples = 501;
  std::string out;
};

int run_curves(const CurveFlags& f) {
  if (!(f.max_eps > 0.0)) throw ConfigError("--max-eps must be positive");
  if (f.samples < 2) throw ConfigError("--samples must be at least 2");
  const ShapeParameter alpha = parse_shape_parameter(f.alpha);
  std::vector<Kernel> kernels;
  for (const std::string& name : f.kernels) {
    Kernel k;
    k.tag = parse_kernel_tag(name);
    k.scale = f.scale;
    k.alpha = alpha;
    k.mode = f.mode;
    k.validate();
    kernels.push_back(k);
  }

  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw std::runtime_error(fmt::format("cannot write {}", f.out));
  }
  std::ostream& os = f.out.empty() ? std::cout : file;
  os << "kernel,alpha,eps,rho,w\n";
  for (const Kernel& k : kernels) {
    for (int i = 0; i < f.samples; ++i) {
      const double eps = f.max_eps * i / (f.samples - 1);
      fmt::print(os, "{},{},{},{},{}\n", kernel_name(k.tag), k.alpha.to_string(), eps, rho(eps, k),
                 weight(eps, k));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive robust losses with graduated nonconvexity"};
  app.require_subcommand(1);

  RunFlags linreg_flags;
  auto* linreg = app.add_subcommand("linreg", "Monte-Carlo robust linear regression benchmark");
  add_run_flags(linreg, linreg_flags, "out/linreg");

  RunFlags icp_flags;
  auto* icp = app.add_subcommand("icp", "point-to-plane ICP benchmark");
  add_run_flags(icp, icp_flags, "out/icp");

  FitFlags fit_flags;
  auto* fitloss = app.add_subcommand("fitloss", "fit the residual distribution and shape parameter");
  fitloss->add_option("residuals", fit_flags.file, "file with one residual per line")->required();
  fitloss->add_option("--dim", fit_flags.dim, "residual dimension n_e")->capture_default_str();
  fitloss->add_option("--tau", fit_flags.tau, "truncation bound")->capture_default_str();
  fitloss->add_option("--bins", fit_flags.bins, "histogram bins")->capture_default_str();
  fitloss->add_flag("--all-residuals", fit_flags.all_residuals,
                    "build the histogram from every residual, not only those inside tau");

  CurveFlags curve_flags;
  auto* curves = app.add_subcommand("curves", "CSV of loss and weight against the residual");
  curves->add_option("--kernel", curve_flags.kernels,
                     "quadratic, cauchy, welsch, gm, tls, adaptive or amb (repeatable)")
      ->capture_default_str();
  curves->add_option("--alpha", curve_flags.alpha, "shape parameter, or -inf")->capture_default_str();
  curves->add_option("--scale", curve_flags.scale, "kernel scale")->capture_default_str();
  curves->add_option("--mode", curve_flags.mode, "mode shift for amb")->capture_default_str();
  curves->add_option("--max-eps", curve_flags.max_eps, "largest residual")->capture_default_str();
  curves->add_option("--samples", curve_flags.samples, "points per curve")->capture_default_str();
  curves->add_option("--out", curve_flags.out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*linreg) return run_linreg(linreg_flags);
    if (*icp) return run_icp(icp_flags);
    if (*fitloss) return run_fitloss(fit_flags);
    return run_curves(curve_flags);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeError;
  }
}
