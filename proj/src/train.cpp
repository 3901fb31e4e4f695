#include "ta/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ta/checkpoint.hpp"
#include "ta/conv.hpp"
#include "ta/degradation.hpp"
#include "ta/errors.hpp"
#include "ta/image.hpp"
#include "ta/model.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"
#include "ta/train_utils.hpp"

namespace fs = std::filesystem;

namespace ta {

std::vector<std::string> list_ppm(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

Tensor random_patch(const Tensor& img, int patch, Rng& rng) {
  const int h = img.dim(1), w = img.dim(2);
  if (h < patch || w < patch) {
    throw ShapeError("training image smaller than patch size " + std::to_string(patch));
  }
  if (h == patch && w == patch) return img;
  const int y0 = rng.uniform_int(0, h - patch);
  const int x0 = rng.uniform_int(0, w - patch);
  Tensor out({3, patch, patch});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < patch; ++y)
      for (int x = 0; x < patch; ++x) out(c, y, x) = img(c, y0 + y, x0 + x);
  return out;
}

}  // namespace

TrainResult train_run(const KvConfig& cfg, const std::string& data_dir,
                      const std::string& out_dir) {
  LossWeights weights;
  weights.l1 = cfg.get_double("loss.l1", weights.l1);
  weights.perceptual = cfg.get_double("loss.perc", weights.perceptual);
  weights.adversarial = cfg.get_double("loss.adv", weights.adversarial);
  if (cfg.has("loss.perc") && weights.perceptual != 0.0) {
    throw ConfigError("loss.perc: perceptual loss requires a pretrained backbone and is not "
                      "supported by this trainer; set it to 0 or remove the key");
  }
  if (cfg.has("loss.adv") && weights.adversarial != 0.0) {
    throw ConfigError("loss.adv: adversarial training is not supported by this trainer; "
                      "set it to 0 or remove the key");
  }
  const double w_l1 = weights.l1;

  const int iters = cfg.get_int("iters", 2000);
  const int batch = cfg.get_int("batch", 4);
  const int patch = cfg.get_int("patch", 32);
  const int checkpoint_every = cfg.get_int("checkpoint_every", 0);
  if (iters < 1 || batch < 1) throw ConfigError("train: iters and batch must be positive");

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.get_double("lr", 4e-4);
  adam_cfg.beta1 = cfg.get_double("adam.beta1", 0.9);
  adam_cfg.beta2 = cfg.get_double("adam.beta2", 0.99);
  adam_cfg.eps = cfg.get_double("adam.eps", 1e-8);
  adam_cfg.halve_every = cfg.get_int("halve_every", 500);
  if (!(adam_cfg.lr > 0.0)) throw ConfigError("train: lr must be positive");

  auto model = build_model(cfg);
  const int scale = model->scale();
  if (patch % scale != 0) throw ConfigError("train: patch size must be divisible by the scale");

  DegradationSpec deg = DegradationSpec::train(scale, cfg.get_double("noise_sigma", 0.0),
                                               cfg.get_int("degradation.order", 1));

  const std::vector<std::string> files = list_ppm(data_dir + "/hr");
  if (files.empty()) throw IoError("no training images under " + data_dir + "/hr");
  std::vector<Tensor> images;
  images.reserve(files.size());
  for (const std::string& f : files) images.push_back(read_ppm(f));

  fs::create_directories(out_dir);
  const std::string loss_path = out_dir + "/loss.csv";
  std::ofstream loss_csv(loss_path);
  if (!loss_csv) throw IoError("cannot write " + loss_path);
  loss_csv << "iter,loss,lr\n";

  std::vector<Param*> params;
  model->visit_params([&params](const std::string& name, Param& p) {
    p.name = name;
    params.push_back(&p);
  });
  Adam opt(params, adam_cfg);

  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  Rng data_rng(seed ^ 0xDA7A5EEDull);

  TrainResult result;
  result.iters = iters;
  result.loss_weights = weights;
  double head_sum = 0.0, tail_sum = 0.0;
  int head_n = 0;
  std::vector<double> tail_window;

  const std::string ckpt_path = out_dir + "/checkpoint.tacp";
  auto save = [&](const std::string& path) {
    save_checkpoint(path, model->model_config(),
                    [&](const ParamVisitor& fn) { model->visit_params(fn); });
  };

  for (int it = 1; it <= iters; ++it) {
    for (Param* p : params) p->reset_grad();
    double batch_loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      const int idx = data_rng.uniform_int(0, static_cast<int>(images.size()) - 1);
      Tensor hr = random_patch(images[static_cast<std::size_t>(idx)], patch, data_rng);
      Tensor lr = degrade(hr, deg, data_rng);
      Tensor sr = model->forward(lr);
      batch_loss += l1_loss(sr, hr);
      model->backward(l1_loss_backward(sr, hr, w_l1 / batch));
    }
    batch_loss /= batch;
    const double lr_now = scheduled_lr(adam_cfg, it);
    if (!std::isfinite(batch_loss)) {
      throw NumericError("train: loss became non-finite at iter " + std::to_string(it) +
                         " (lr = " + std::to_string(lr_now) + ")");
    }
    opt.step(it);

    char line[96];
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g\n", it, batch_loss, lr_now);
    loss_csv << line;

    if (head_n < 10) {
      head_sum += batch_loss;
      ++head_n;
    }
    tail_window.push_back(batch_loss);
    if (tail_window.size() > 10) tail_window.erase(tail_window.begin());

    if (checkpoint_every > 0 && it % checkpoint_every == 0 && it != iters) {
      save(out_dir + "/checkpoint_iter" + std::to_string(it) + ".tacp");
    }
  }
  save(ckpt_path);

  for (double v : tail_window) tail_sum += v;
  result.initial_loss = head_sum / head_n;
  result.final_loss = tail_sum / static_cast<double>(tail_window.size());
  result.checkpoint_path = ckpt_path;
  result.loss_csv_path = loss_path;
  return result;
}

}  // namespace ta
