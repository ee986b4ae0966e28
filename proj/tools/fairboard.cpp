#include <CLI11.hpp>
#include <functional>
#include <iostream>
#include <map>

#include "fairboard/config.hpp"
#include "fairboard/error.hpp"
#include "fairboard/pipeline.hpp"
#include "fairboard/service.hpp"
#include "fairboard/synth.hpp"

namespace {

void print_report(const fairboard::StageReport& r) {
  std::cout << r.stage << ": " << r.outputs.size() << " outputs\n";
  for (const auto& n : r.notes) std::cout << "  " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairboard: equity audit of segmentation models"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<double> alpha, fwhm;
  std::optional<int> n_perm;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "analysis config JSON");
  app.add_option("--alpha", alpha, "FDR level");
  app.add_option("--fwhm", fwhm, "smoothing kernel FWHM in mm");
  app.add_option("--n-perm", n_perm, "sign-flip permutations");
  app.add_option("--seed", seed, "random seed (overrides FAIRBOARD_SEED)");
  app.add_flag("-q,--quiet", quiet, "suppress progress messages");

  using Stage = std::function<fairboard::StageReport(const fairboard::AnalysisConfig&, const fairboard::Logger&)>;
  const std::vector<std::pair<std::string, Stage>> stages{
      {"evaluate", fairboard::cmd_evaluate},       {"univariate", fairboard::cmd_univariate},
      {"inequality", fairboard::cmd_inequality},   {"league", fairboard::cmd_league},
      {"cohort", fairboard::cmd_cohort},           {"spatial", fairboard::cmd_spatial},
      {"representational", fairboard::cmd_representational}};
  std::map<std::string, CLI::App*> stage_cmds;
  for (const auto& [name, fn] : stages) stage_cmds[name] = app.add_subcommand(name, "run the " + name + " stage");
  auto* all = app.add_subcommand("all", "run every stage in order");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "serve the JSON API over stored results");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "TCP port");

  std::string synth_dir;
  fairboard::SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write the bundled synthetic study");
  synth->add_option("dir", synth_dir, "destination directory")->required();
  synth->add_option("--patients", synth_opts.n_patients, "number of patients");
  synth->add_option("--synth-seed", synth_opts.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      fairboard::write_synthetic_study(synth_dir, synth_opts);
      std::cout << "synthetic study written to " << synth_dir << "\n";
      return 0;
    }
    if (config_path.empty()) throw fairboard::Error(fairboard::ErrorCode::InvalidArgument, "--config is required");
    auto config = fairboard::load_config(config_path);
    fairboard::apply_environment(config);
    if (alpha) config.alpha = *alpha;
    if (fwhm) config.fwhm_mm = *fwhm;
    if (n_perm) config.n_perm = *n_perm;
    if (seed) {
      config.seed = *seed;
      config.embedding.seed = *seed;
    }
    config.validate();
    const fairboard::Logger log = quiet ? fairboard::Logger{} : [](const std::string& m) { std::cerr << m << "\n"; };

    if (serve->parsed()) {
      fairboard::Service service(config);
      std::cout << "serving " << config.output_path() << " on http://" << host << ":" << port << "\n";
      service.serve(host, port);
      return 0;
    }
    if (all->parsed()) {
      for (const auto& r : fairboard::cmd_all(config, log)) print_report(r);
      return 0;
    }
    for (const auto& [name, fn] : stages)
      if (stage_cmds[name]->parsed()) print_report(fn(config, log));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
