#pragma once

#include <string>

#include "ta/config.hpp"

namespace ta {

// Weights of the composite restoration loss. Only the l1 term is trainable
// in this pipeline; the other two are carried so configs keep the full
// surface, and enabling either is a load-time error.
struct LossWeights {
  double l1 = 1.0;
  double perceptual = 1.0;
  double adversarial = 0.1;
};

struct TrainResult {
  double initial_loss = 0.0;  // mean over the first 10 iterations
  double final_loss = 0.0;    // mean over the last 10 iterations
  int iters = 0;
  LossWeights loss_weights;
  std::string checkpoint_path;
  std::string loss_csv_path;
};

// Trains the configured model on hr/*.ppm patches from data_dir, degrading
// each sampled patch on the fly. Writes loss.csv (iter,loss,lr) and a final
// checkpoint into out_dir. Deterministic for a fixed config (seed included).
//
// Config keys beyond the model block: iters, batch, lr, halve_every, patch,
// noise_sigma, degradation.order, checkpoint_every, loss.l1 (loss.perc and
// loss.adv are recognized but must stay zero).
TrainResult train_run(const KvConfig& cfg, const std::string& data_dir,
                      const std::string& out_dir);

// Sorted *.ppm paths in a directory.
std::vector<std::string> list_ppm(const std::string& dir);

}  // namespace ta
