// Command-line front end. Talks to the core exclusively through the C API.

#include <semcom/semcom.h>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::fprintf(stderr, "error: cannot read %s\n", path.c_str());
    std::exit(2);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int fail(int rc) {
  std::fprintf(stderr, "error (%d): %s\n", rc, semcom_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semcom — semantic-communication link simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", model_out;
  long long seed = -1;
  int workers = 1;

  auto* run = app.add_subcommand("run", "run an experiment grid from a config file");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--seed", seed, "override the config master seed");
  run->add_option("--workers", workers, "concurrent trial workers");
  run->add_option("--out", out_dir, "output directory");

  auto* train = app.add_subcommand("train-denoiser",
                                   "train the tiny denoiser from a config file");
  train->add_option("--config", config_path, "JSON config file")->required();
  train->add_option("--out", model_out, "model output path (default: data.model)");

  auto* selftest = app.add_subcommand("selftest", "run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    std::string cfg = read_file(config_path);
    int rc = semcom_run_grid(cfg.c_str(), out_dir.c_str(), workers, seed);
    if (rc != SEMCOM_OK) return fail(rc);
    std::printf("results written to %s\n", out_dir.c_str());
    return 0;
  }
  if (train->parsed()) {
    std::string cfg = read_file(config_path);
    double loss = 0.0;
    int rc = semcom_train_denoiser(cfg.c_str(),
                                   model_out.empty() ? nullptr : model_out.c_str(),
                                   &loss);
    if (rc != SEMCOM_OK) return fail(rc);
    std::printf("trained; final held-out loss %.6f\n", loss);
    return 0;
  }
  if (selftest->parsed()) {
    int rc = semcom_selftest();
    if (rc != SEMCOM_OK) return fail(rc);
    return 0;
  }
  return 1;
}
