// lfnode: experiment driver for Leapfrog neural-ODE gradients.
//
//   lfnode converge  [--config f] [--out dir] [--levels 16,32,...] [--refine r] ...
//   lfnode oscillate --L 64 ...
//   lfnode gradcheck --L 16 ...
//   lfnode train     --L 32 --steps 100 --stepsize 0.1 --mode vanilla|modified ...
//   lfnode plot      --csv out/converge.csv --kind converge
//
// Exit codes: 0 success, 1 argument/config error, 2 numerical failure,
// 3 gradient-check failure.

#include "lfnode/config.hpp"
#include "lfnode/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace {

using namespace lfnode;

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitGradcheck = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> field;
  std::optional<std::string> levels;
  std::optional<std::size_t> refine;
  std::optional<std::string> probe;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "flat JSON experiment config");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "seed for the weight path and sampled data");
  cmd->add_option("--field", f.field, "field kind")->check(CLI::IsMember({"tanh", "linear"}));
  cmd->add_option("--levels", f.levels, "comma-separated layer counts, each >= 4");
  cmd->add_option("--refine", f.refine, "reference sub-steps per layer");
  cmd->add_option("--probe", f.probe, "projection for oscillation curves")->check(CLI::IsMember({"ones", "e1"}));
}

std::vector<std::size_t> parse_levels(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("--levels: '" + item + "' is not a layer count");
    }
  }
  return out;
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
  if (f.field) {
    const FieldKind wanted = *f.field == "linear" ? FieldKind::linear : FieldKind::tanh;
    if (wanted != c.field) {
      // Switching field kind swaps in that kind's default instance; run-level
      // settings from the config survive.
      ExperimentConfig base = wanted == FieldKind::linear ? linear_model_config() : ExperimentConfig{};
      base.levels = c.levels;
      base.refine = c.refine;
      base.seed = c.seed;
      base.path_seed = c.path_seed;
      base.out_dir = c.out_dir;
      base.probe = c.probe;
      c = base;
    }
  }
  if (f.out) c.out_dir = *f.out;
  if (f.seed) c.seed = c.path_seed = *f.seed;
  if (f.levels) c.levels = parse_levels(*f.levels);
  if (f.refine) c.refine = *f.refine;
  if (f.probe) c.probe = *f.probe == "e1" ? Probe::e1 : Probe::ones;
  c.validate();
  return c;
}

std::string output_path(const ExperimentConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / name).string();
}

std::string slope_text(const std::optional<double>& s) {
  if (!s) return "absent (fewer than 3 levels)";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *s);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leapfrog neural-ODE gradient experiments"};
  app.require_subcommand(1);

  CommonFlags converge_f, osc_f, grad_f, train_f;
  std::size_t osc_layers = 64, grad_layers = 16, train_layers = 32;
  int train_steps = 100;
  double train_stepsize = 0.1;
  std::string train_mode = "vanilla";
  std::string plot_csv, plot_kind, plot_out;

  auto* converge = app.add_subcommand("converge", "gradient error vs ground truth over a ladder of L");
  add_common(converge, converge_f);

  auto* oscillate = app.add_subcommand("oscillate", "per-layer vanilla/modified/true gradient curves");
  add_common(oscillate, osc_f);
  oscillate->add_option("--L", osc_layers, "layer count")->check(CLI::Range(4, 1 << 20));

  auto* gradcheck = app.add_subcommand("gradcheck", "recursion vs tape vs finite differences");
  add_common(gradcheck, grad_f);
  gradcheck->add_option("--L", grad_layers, "layer count")->check(CLI::Range(4, 1 << 20));

  auto* train = app.add_subcommand("train", "gradient descent with vanilla or modified gradients");
  add_common(train, train_f);
  train->add_option("--L", train_layers, "layer count")->check(CLI::Range(4, 1 << 20));
  train->add_option("--steps", train_steps, "descent steps")->check(CLI::PositiveNumber);
  train->add_option("--stepsize", train_stepsize, "descent step size");
  train->add_option("--mode", train_mode, "gradient used for the update")
      ->check(CLI::IsMember({"vanilla", "modified"}));

  auto* plot = app.add_subcommand("plot", "write a gnuplot script for a CSV produced by this tool");
  plot->add_option("--csv", plot_csv, "input CSV")->required();
  plot->add_option("--kind", plot_kind, "CSV kind")
      ->required()
      ->check(CLI::IsMember({"converge", "oscillate", "train"}));
  plot->add_option("--out", plot_out, "script path (default: <csv>.gp)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*converge) {
      const ExperimentConfig c = resolve(converge_f);
      const ConvergenceRecord rec = run_convergence(c);
      const std::string path = output_path(c, "converge.csv");
      rec.table().write(path);
      for (const auto& lv : rec.levels) {
        std::printf("L=%-5zu err_vanilla=%.6e err_modified=%.6e err_euler=%.6e\n", lv.layers, lv.err_vanilla,
                    lv.err_modified, lv.err_euler);
      }
      std::printf("slope vanilla:  %s\n", slope_text(rec.slope_vanilla).c_str());
      std::printf("slope modified: %s\n", slope_text(rec.slope_modified).c_str());
      std::printf("slope euler:    %s\n", slope_text(rec.slope_euler).c_str());
      std::printf("wrote %s\n", path.c_str());
    } else if (*oscillate) {
      const ExperimentConfig c = resolve(osc_f);
      const OscillationRecord rec = run_oscillation(c, osc_layers);
      const std::string path = output_path(c, "oscillate_L" + std::to_string(osc_layers) + ".csv");
      rec.table().write(path);
      std::printf("L=%zu alternation=%.4f vanilla_amplitude=%.6e modified_amplitude=%.6e\n", rec.layers,
                  rec.alternation_fraction, rec.vanilla_amplitude, rec.modified_amplitude);
      std::printf("wrote %s\n", path.c_str());
    } else if (*gradcheck) {
      const ExperimentConfig c = resolve(grad_f);
      const GradcheckReport rep = run_gradcheck(c, grad_layers);
      std::printf("L=%zu rel(recursion,tape)=%.3e rel(recursion,fd)=%.3e rel(tape,fd)=%.3e\n", rep.layers,
                  rep.rel_recursion_tape, rep.rel_recursion_fd, rep.rel_tape_fd);
      if (!rep.passed) {
        std::fprintf(stderr, "gradcheck FAILED: %s\n", rep.failure.c_str());
        return kExitGradcheck;
      }
      std::printf("gradcheck passed\n");
    } else if (*train) {
      const ExperimentConfig c = resolve(train_f);
      const TrainMode mode = train_mode == "modified" ? TrainMode::modified : TrainMode::vanilla;
      const TrainRecord rec = run_train(c, train_layers, train_steps, train_stepsize, mode);
      const std::string path = output_path(c, "train_" + train_mode + ".csv");
      rec.table().write(path);
      std::printf("initial loss %.6e, final loss %.6e after %zu steps%s\n", rec.losses.front(), rec.losses.back(),
                  rec.losses.size() - 1, rec.diverged ? " (diverged, stopped early)" : "");
      std::printf("wrote %s\n", path.c_str());
      if (rec.diverged && !std::isfinite(rec.losses.back())) return kExitNumerical;
    } else if (*plot) {
      static const std::map<std::string, PlotKind> kinds = {
          {"converge", PlotKind::converge}, {"oscillate", PlotKind::oscillate}, {"train", PlotKind::train}};
      const std::string out = plot_out.empty() ? plot_csv + ".gp" : plot_out;
      emit_plot(plot_csv, kinds.at(plot_kind), out);
      std::printf("wrote %s\n", out.c_str());
    }
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
