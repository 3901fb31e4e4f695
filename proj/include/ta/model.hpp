#pragma once

#include <memory>
#include <string>

#include "ta/config.hpp"
#include "ta/networks.hpp"

namespace ta {

// Uniform handle over the two trainable models. Construction is fully
// determined by (config, seed); the relevant keys are model, scale,
// channels, blocks, mlfr.variant, taylor.order, alpha1..4, beta1..4, seed.
class Model {
 public:
  explicit Model(const KvConfig& cfg);

  Tensor forward(const Tensor& lr);
  Tensor backward(const Tensor& dy);
  void visit_params(const ParamVisitor& fn);
  std::int64_t param_count();

  const std::string& kind() const { return kind_; }
  int scale() const { return scale_; }
  RealNet* realnet() { return real_.get(); }
  LabNet* labnet() { return lab_.get(); }

  // The config subset that reconstructs this model, embedded in checkpoints.
  KvConfig model_config() const { return model_cfg_; }

 private:
  std::string kind_;
  int scale_ = 2;
  KvConfig model_cfg_;
  std::unique_ptr<LabNet> lab_;
  std::unique_ptr<RealNet> real_;
};

std::unique_ptr<Model> build_model(const KvConfig& cfg);
std::unique_ptr<Model> load_model_from_checkpoint(const std::string& checkpoint_path);

}  // namespace ta
