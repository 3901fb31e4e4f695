#include "ta/model.hpp"

#include "ta/checkpoint.hpp"
#include "ta/errors.hpp"
#include "ta/rng.hpp"

namespace ta {

namespace {

std::string knob_key(const char* base, int i) { return std::string(base) + std::to_string(i); }

}  // namespace

Model::Model(const KvConfig& cfg) {
  kind_ = cfg.get("model", "labnet");
  if (kind_ != "labnet" && kind_ != "realnet") {
    throw ConfigError("model must be 'labnet' or 'realnet', got '" + kind_ + "'");
  }
  scale_ = cfg.get_int("scale", 2);
  const int channels = cfg.get_int("channels", 16);
  const int mlfr_variant = MlfrVariant::from_string(cfg.get("mlfr.variant", "v3")).variant;
  const int taylor_order = cfg.get_int("taylor.order", 2);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  Rng rng(seed ^ 0x5EEDFACEull);

  model_cfg_.set("model", kind_);
  model_cfg_.set("scale", std::to_string(scale_));
  model_cfg_.set("channels", std::to_string(channels));
  model_cfg_.set("mlfr.variant", "v" + std::to_string(mlfr_variant));
  model_cfg_.set("taylor.order", std::to_string(taylor_order));
  model_cfg_.set("seed", std::to_string(seed));

  if (kind_ == "labnet") {
    LabNetConfig lc;
    lc.channels = channels;
    lc.scale = scale_;
    lc.mlfr_variant = mlfr_variant;
    lc.taylor_order = taylor_order;
    std::vector<int> blocks = cfg.get_int_list("blocks", {1, 1, 1, 1, 1, 1});
    if (blocks.size() != 6) throw ConfigError("labnet: 'blocks' must list exactly 6 modules");
    for (int i = 0; i < 6; ++i) lc.blocks[static_cast<std::size_t>(i)] = blocks[static_cast<std::size_t>(i)];
    std::string blocks_str;
    for (int i = 0; i < 6; ++i) blocks_str += (i ? "," : "") + std::to_string(lc.blocks[i]);
    model_cfg_.set("blocks", blocks_str);
    lab_ = std::make_unique<LabNet>(lc, rng);
  } else {
    RealNetConfig rc;
    rc.channels = channels;
    rc.scale = scale_;
    rc.mlfr_variant = mlfr_variant;
    rc.taylor_order = taylor_order;
    rc.blocks = cfg.get_int_list("blocks", {1, 1});
    std::string blocks_str;
    for (std::size_t i = 0; i < rc.blocks.size(); ++i)
      blocks_str += (i ? "," : "") + std::to_string(rc.blocks[i]);
    model_cfg_.set("blocks", blocks_str);
    for (int i = 0; i < 4; ++i) {
      rc.alpha[static_cast<std::size_t>(i)] = cfg.get_double(knob_key("alpha", i + 1), 1.0);
      rc.beta[static_cast<std::size_t>(i)] = cfg.get_double(knob_key("beta", i + 1), 1.0);
      model_cfg_.set(knob_key("alpha", i + 1), std::to_string(rc.alpha[static_cast<std::size_t>(i)]));
      model_cfg_.set(knob_key("beta", i + 1), std::to_string(rc.beta[static_cast<std::size_t>(i)]));
    }
    real_ = std::make_unique<RealNet>(rc, rng);
  }
}

Tensor Model::forward(const Tensor& lr) { return lab_ ? lab_->forward(lr) : real_->forward(lr); }

Tensor Model::backward(const Tensor& dy) { return lab_ ? lab_->backward(dy) : real_->backward(dy); }

void Model::visit_params(const ParamVisitor& fn) {
  if (lab_) {
    lab_->visit_params("", fn);
  } else {
    real_->visit_params("", fn);
  }
}

std::int64_t Model::param_count() {
  std::int64_t n = 0;
  visit_params([&n](const std::string&, Param& p) { n += static_cast<std::int64_t>(p.size()); });
  return n;
}

std::unique_ptr<Model> build_model(const KvConfig& cfg) { return std::make_unique<Model>(cfg); }

std::unique_ptr<Model> load_model_from_checkpoint(const std::string& checkpoint_path) {
  KvConfig cfg = load_checkpoint_config(checkpoint_path);
  auto model = std::make_unique<Model>(cfg);
  load_checkpoint_params(checkpoint_path,
                         [&](const ParamVisitor& fn) { model->visit_params(fn); });
  return model;
}

}  // namespace ta
