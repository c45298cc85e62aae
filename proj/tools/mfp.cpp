// mfp: generate, train, evaluate, predict, ablate.
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfp/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace mfp;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> futures;
  std::string variant;
  std::optional<std::size_t> iterations;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool model_flags) {
  app->add_option("--config", c.config, "Run config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Override the train and dataset seed");
  app->add_option("--out", c.out, "Output directory");
  if (model_flags) {
    app->add_option("--futures", c.futures, "Number of futures f")->check(CLI::PositiveNumber);
    app->add_option("--variant", c.variant,
                    "full|shared_encoder|non_separated|one_loss|tconv_decoder|model_ensemble");
    app->add_option("--iterations", c.iterations, "Override training iterations");
  }
}

cli::RunConfig resolve(const Common& c) {
  cli::Overrides o;
  o.seed = c.seed;
  o.futures = c.futures;
  o.iterations = c.iterations;
  if (!c.variant.empty()) {
    o.variant = parse_variant(c.variant);
    if (!o.variant) throw ConfigError("unknown variant '" + c.variant + "'");
  }
  std::optional<fs::path> path;
  if (!c.config.empty()) path = c.config;
  return cli::resolve_config(path, o);
}

fs::path out_or(const Common& c, const fs::path& fallback) {
  return c.out.empty() ? fallback : fs::path(c.out);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-future multivariate time-series forecaster"};
  app.require_subcommand(1);

  Common gen, tr, ev, ab;
  std::string checkpoint, baseline, csv, expert, predict_out = "prediction";
  bool scalability = false;

  auto* g = app.add_subcommand("generate", "Write synthetic merchant CSVs");
  add_common(g, gen, false);
  auto* t = app.add_subcommand("train", "Train the forecaster");
  add_common(t, tr, true);
  auto* e = app.add_subcommand("evaluate", "Rolling evaluation of checkpoints or baselines");
  add_common(e, ev, true);
  e->add_option("--checkpoint", checkpoint, "Checkpoint root (default: config checkpoint_dir)");
  e->add_option("--baseline", baseline, "nn|ridge");
  auto* p = app.add_subcommand("predict", "Predict futures after the end of a CSV");
  p->add_option("--checkpoint", checkpoint, "Model checkpoint directory")->required();
  p->add_option("--csv", csv, "Merchant CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--expert", expert, "Expert classifier checkpoint directory");
  p->add_option("--out", predict_out, "Output directory");
  auto* a = app.add_subcommand("ablate", "Variant ablation or scalability sweep");
  add_common(a, ab, true);
  a->add_flag("--scalability", scalability, "Sweep f over {1,3,12} for full vs model_ensemble");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) {
      const auto c = resolve(gen);
      cli::cmd_generate(c, out_or(gen, c.data_dir), std::cout);
    } else if (t->parsed()) {
      const auto c = resolve(tr);
      cli::cmd_train(c, out_or(tr, c.checkpoint_dir), std::cout);
    } else if (e->parsed()) {
      const auto c = resolve(ev);
      std::optional<cli::Baseline> b;
      if (!baseline.empty()) {
        b = cli::parse_baseline(baseline);
        if (!b) throw ConfigError("unknown baseline '" + baseline + "' (nn or ridge)");
      }
      cli::cmd_evaluate(c, checkpoint.empty() ? c.checkpoint_dir : fs::path(checkpoint), b,
                        out_or(ev, c.report_dir), std::cout);
    } else if (p->parsed()) {
      std::optional<fs::path> ex;
      if (!expert.empty()) ex = expert;
      cli::cmd_predict(checkpoint, csv, ex, predict_out, std::cout);
    } else if (a->parsed()) {
      const auto c = resolve(ab);
      cli::cmd_ablate(c, scalability, out_or(ab, c.report_dir / "ablation"), std::cout);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
