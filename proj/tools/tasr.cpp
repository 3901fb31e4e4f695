// tasr: benchmarks, gradient checks, toy training, evaluation, and
// single-image super-resolution around the Taylor-expansion attention stack.
//
// Exit codes: 0 success, 1 check/run failure, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ta/bench.hpp"
#include "ta/checkpoint.hpp"
#include "ta/config.hpp"
#include "ta/datagen.hpp"
#include "ta/errors.hpp"
#include "ta/evalrun.hpp"
#include "ta/gradsuite.hpp"
#include "ta/image.hpp"
#include "ta/model.hpp"
#include "ta/train.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("TAYLOR_ATTN_SEED")) {
    return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  }
  return 0;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    out.push_back(s.substr(pos, comma == std::string::npos ? s.npos : comma - pos));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_bench(const std::string& kernels_arg, int d, const std::string& sweep_arg,
              std::uint64_t seed, bool fit) {
  std::vector<std::string> kernels = split_csv(kernels_arg);
  for (const std::string& k : kernels) {
    if (!ta::is_bench_kernel(k)) {
      std::cerr << "unknown kernel '" << k << "' (known: nla, exp, taylor-linear, stea, mlfr)\n";
      return 2;
    }
  }
  std::vector<int> ns = ta::parse_sweep(sweep_arg);
  std::vector<ta::BenchRecord> records;
  std::printf("kernel,n,d,flops,wall_ns,seed\n");
  for (const std::string& k : kernels) {
    for (int n : ns) {
      ta::BenchRecord r = ta::run_bench_kernel(k, n, d, seed);
      records.push_back(r);
      std::printf("%s,%d,%d,%llu,%llu,%llu\n", r.kernel.c_str(), r.n, r.d,
                  static_cast<unsigned long long>(r.flops),
                  static_cast<unsigned long long>(r.wall_ns),
                  static_cast<unsigned long long>(r.seed));
    }
  }
  if (fit) {
    for (const std::string& k : kernels) {
      std::printf("# slope,%s,%.6f\n", k.c_str(), ta::fit_loglog_slope(records, k));
    }
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool inject_fault) {
  const std::vector<ta::GradSuiteResult> results = ta::run_grad_suite(seed, inject_fault);
  bool all_pass = true;
  std::printf("%-22s %10s %12s %10s  %s\n", "op", "coords", "max_rel_err", "tol", "status");
  for (const ta::GradSuiteResult& r : results) {
    std::printf("%-22s %10zu %12.3e %10.0e  %s\n", r.op.c_str(), r.coords, r.max_rel_err,
                r.tolerance, r.pass ? "ok" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  if (!all_pass) {
    for (const ta::GradSuiteResult& r : results) {
      if (!r.pass) {
        std::fprintf(stderr, "gradient check failed for op '%s' (%.3e > %.0e)\n", r.op.c_str(),
                     r.max_rel_err, r.tolerance);
      }
    }
    return 1;
  }
  std::printf("all %zu operations passed\n", results.size());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, long long seed_override) {
  ta::KvConfig cfg = ta::KvConfig::parse_file(config_path);
  if (seed_override >= 0) cfg.set("seed", std::to_string(seed_override));
  ta::TrainResult res = ta::train_run(cfg, data_dir, out_dir);
  std::printf("trained %d iters: loss %.6f -> %.6f\ncheckpoint: %s\nloss log: %s\n", res.iters,
              res.initial_loss, res.final_loss, res.checkpoint_path.c_str(),
              res.loss_csv_path.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& hr_dir, double noise_sigma,
             std::uint64_t seed) {
  ta::EvalResult res = ta::eval_run(checkpoint, hr_dir, noise_sigma, seed, &std::cout);
  std::fprintf(stderr, "model mean: %.4f dB / %.4f ssim; bicubic mean: %.4f dB / %.4f ssim\n",
               res.model_mean_psnr, res.model_mean_ssim, res.bicubic_mean_psnr,
               res.bicubic_mean_ssim);
  return 0;
}

int cmd_sr(const std::string& checkpoint, const std::string& input, const std::string& output,
           const std::string& alpha_arg, const std::string& beta_arg) {
  const std::vector<std::string> alphas = split_csv(alpha_arg);
  const std::vector<std::string> betas = split_csv(beta_arg);
  if (alphas.size() != 4 || betas.size() != 4) {
    std::cerr << "sr: expected exactly 4 alpha and 4 beta values\n";
    return 2;
  }
  auto model = ta::load_model_from_checkpoint(checkpoint);
  if (model->kind() != "realnet") {
    throw ta::ConfigError("sr requires a realnet checkpoint, got model=" + model->kind());
  }
  std::array<double, 4> alpha, beta;
  for (int i = 0; i < 4; ++i) {
    alpha[static_cast<std::size_t>(i)] = std::stod(alphas[static_cast<std::size_t>(i)]);
    beta[static_cast<std::size_t>(i)] = std::stod(betas[static_cast<std::size_t>(i)]);
  }
  model->realnet()->set_knobs(alpha, beta);
  ta::Tensor lr = ta::read_ppm(input);
  ta::Tensor sr = ta::clamp01(model->forward(lr));
  ta::write_ppm(output, sr);
  std::printf("wrote %s (%dx%d)\n", output.c_str(), sr.dim(2), sr.dim(1));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Taylor-expansion attention toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = default_seed();

  auto* bench = app.add_subcommand("bench", "FLOP-instrumented kernel benchmark (CSV on stdout)");
  std::string kernels = "nla,stea";
  std::string sweep = "256..4096x2";
  int bench_d = 16;
  bool fit = false;
  bench->add_option("--kernel", kernels, "comma list of kernels");
  bench->add_option("--d", bench_d, "channel count");
  bench->add_option("--n", sweep, "positions sweep, e.g. 256..4096x2 or 256,512");
  bench->add_option("--seed", seed, "rng seed");
  bench->add_flag("--fit", fit, "append log-log slope per kernel");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  bool inject_fault = false;
  gradcheck->add_option("--seed", seed, "rng seed");
  gradcheck->add_flag("--inject-fault", inject_fault,
                      "append a deliberately broken backward (must fail; testing aid)");

  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string config_path, data_dir, out_dir = "out";
  long long seed_override = -1;
  train->add_option("--config", config_path, "key = value config file")->required();
  train->add_option("--data", data_dir, "dataset dir containing hr/*.ppm")->required();
  train->add_option("--out", out_dir, "output dir for checkpoint and loss.csv");
  train->add_option("--seed", seed_override, "override the config seed");

  auto* eval = app.add_subcommand("eval", "PSNR/SSIM over the evaluation sigmas (CSV on stdout)");
  std::string checkpoint, hr_dir;
  double noise_sigma = 0.0;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--hr", hr_dir, "folder of ground-truth ppm images")->required();
  eval->add_option("--noise", noise_sigma, "noise std on the 0-255 scale");
  eval->add_option("--seed", seed, "rng seed");

  auto* sr = app.add_subcommand("sr", "super-resolve one image with a realnet checkpoint");
  std::string sr_in, sr_out = "sr.ppm", alpha_arg = "1,1,1,1", beta_arg = "1,1,1,1";
  sr->add_option("--checkpoint", checkpoint, "realnet checkpoint")->required();
  sr->add_option("--in", sr_in, "input ppm")->required();
  sr->add_option("--out", sr_out, "output ppm");
  sr->add_option("--alpha", alpha_arg, "4 comma-separated denoise knobs");
  sr->add_option("--beta", beta_arg, "4 comma-separated deblur knobs");

  auto* make_data = app.add_subcommand("make-data", "generate a synthetic hr/val corpus");
  std::string md_out = "data";
  int md_count = 200, md_val = 24, md_size = 32, md_lr_scale = 0;
  double md_noise = 0.0;
  make_data->add_option("--out", md_out, "output dir");
  make_data->add_option("--count", md_count, "training images");
  make_data->add_option("--val", md_val, "validation images");
  make_data->add_option("--size", md_size, "image side length");
  make_data->add_option("--lr-scale", md_lr_scale, "also write lr/ mirrored at this scale");
  make_data->add_option("--noise", md_noise, "noise std for the lr mirror");
  make_data->add_option("--seed", seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bench->parsed()) return cmd_bench(kernels, bench_d, sweep, seed, fit);
    if (gradcheck->parsed()) return cmd_gradcheck(seed, inject_fault);
    if (train->parsed()) return cmd_train(config_path, data_dir, out_dir, seed_override);
    if (eval->parsed()) return cmd_eval(checkpoint, hr_dir, noise_sigma, seed);
    if (sr->parsed()) return cmd_sr(checkpoint, sr_in, sr_out, alpha_arg, beta_arg);
    if (make_data->parsed()) {
      ta::generate_dataset(md_out, md_count, md_val, md_size, seed, md_lr_scale, md_noise);
      std::printf("wrote %d train + %d val images under %s\n", md_count, md_val, md_out.c_str());
      return 0;
    }
  } catch (const ta::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
