#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ta {

struct EvalRow {
  std::string image;  // "name" for the model, "bicubic/name" for the baseline
  double sigma = 0.0;
  double psnr_db = 0.0;
  double ssim_val = 0.0;
};

struct EvalResult {
  std::vector<EvalRow> rows;
  double model_mean_psnr = 0.0;
  double model_mean_ssim = 0.0;
  double bicubic_mean_psnr = 0.0;
  double bicubic_mean_ssim = 0.0;
};

// Degrades every hr image at the eight per-scale evaluation sigmas, runs the
// checkpointed model and the bicubic baseline, and scores both against the
// (auto-cropped) ground truth. Writes CSV `image,sigma,psnr,ssim` plus two
// trailing mean rows when csv_out is given.
EvalResult eval_run(const std::string& checkpoint_path, const std::string& hr_dir,
                    double noise_sigma, std::uint64_t seed, std::ostream* csv_out);

}  // namespace ta
