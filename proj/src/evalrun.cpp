#include "ta/evalrun.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "ta/conv.hpp"
#include "ta/degradation.hpp"
#include "ta/errors.hpp"
#include "ta/image.hpp"
#include "ta/metrics.hpp"
#include "ta/model.hpp"
#include "ta/train.hpp"

namespace ta {

namespace {

void emit_row(std::ostream* os, const std::string& image, const std::string& sigma, double p,
              double s) {
  if (!os) return;
  char buf[64];
  *os << image << "," << sigma << ",";
  if (std::isinf(p)) {
    *os << "inf";
  } else {
    std::snprintf(buf, sizeof(buf), "%.6f", p);
    *os << buf;
  }
  std::snprintf(buf, sizeof(buf), ",%.6f\n", s);
  *os << buf;
}

std::string format_sigma(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", sigma);
  return buf;
}

}  // namespace

EvalResult eval_run(const std::string& checkpoint_path, const std::string& hr_dir,
                    double noise_sigma, std::uint64_t seed, std::ostream* csv_out) {
  auto model = load_model_from_checkpoint(checkpoint_path);
  const int s = model->scale();
  const std::vector<double> sigmas = test_sigmas(s);
  const std::vector<std::string> files = list_ppm(hr_dir);
  if (files.empty()) throw IoError("no evaluation images under " + hr_dir);

  if (csv_out) *csv_out << "image,sigma,psnr,ssim\n";

  EvalResult result;
  double mp = 0.0, ms = 0.0, bp = 0.0, bs = 0.0;
  int count = 0;
  std::uint64_t item = 0;
  for (const std::string& path : files) {
    const std::string name = std::filesystem::path(path).filename().string();
    Tensor hr_full = read_ppm(path);
    // Auto-crop to a multiple of the scale.
    const int h = hr_full.dim(1) / s * s, w = hr_full.dim(2) / s * s;
    Tensor hr = crop(hr_full, h, w);
    for (double sigma : sigmas) {
      Rng rng = Rng::derived(seed, item++);
      Tensor lr = degrade_with_sigma(hr, sigma, s, noise_sigma, rng);
      Tensor sr = clamp01(model->forward(lr));
      Tensor bicubic = clamp01(resize_bicubic(lr, h, w));

      EvalRow row{name, sigma, psnr(sr, hr), ssim(sr, hr)};
      EvalRow brow{"bicubic/" + name, sigma, psnr(bicubic, hr), ssim(bicubic, hr)};
      emit_row(csv_out, row.image, format_sigma(sigma), row.psnr_db, row.ssim_val);
      emit_row(csv_out, brow.image, format_sigma(sigma), brow.psnr_db, brow.ssim_val);
      result.rows.push_back(row);
      result.rows.push_back(brow);
      mp += row.psnr_db;
      ms += row.ssim_val;
      bp += brow.psnr_db;
      bs += brow.ssim_val;
      ++count;
    }
  }
  result.model_mean_psnr = mp / count;
  result.model_mean_ssim = ms / count;
  result.bicubic_mean_psnr = bp / count;
  result.bicubic_mean_ssim = bs / count;
  emit_row(csv_out, "mean", "all", result.model_mean_psnr, result.model_mean_ssim);
  emit_row(csv_out, "bicubic/mean", "all", result.bicubic_mean_psnr, result.bicubic_mean_ssim);
  return result;
}

}  // namespace ta
