#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ta/checkpoint.hpp"
#include "ta/model.hpp"
#include "ta/networks.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"

using namespace ta;

namespace {

LabNetConfig desk_labnet(int channels = 4, int scale = 2, int mlfr = 1) {
  LabNetConfig cfg;
  cfg.channels = channels;
  cfg.scale = scale;
  cfg.blocks = {1, 1, 1, 1, 1, 1};
  cfg.mlfr_variant = mlfr;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("lstea block with a zeroed update path is the identity") {
  Rng rng(1);
  LsteaBlock block(4, 2, MlfrVariant(2), rng);
  block.visit_params("", [](const std::string&, Param& p) { p.value.fill(0.0); });
  Tensor x = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
  Tensor y = block.forward(x);
  CHECK(max_abs_diff(y, x) == 0.0);
}

TEST_CASE("lstea block preserves shape") {
  Rng rng(2);
  LsteaBlock block(6, 2, MlfrVariant(3), rng);
  Tensor x = rng.uniform_tensor({6, 7, 4}, -1.0, 1.0);
  CHECK(block.forward(x).shape() == x.shape());
}

TEST_CASE("labnet output shapes across scales") {
  for (int s : {2, 3, 4}) {
    Rng rng(3);
    LabNet net(desk_labnet(4, s), rng);
    Tensor lr = rng.uniform_tensor({3, 16, 16}, 0.0, 1.0);
    Tensor out = net.forward(lr);
    CHECK(out.shape() == std::vector<int>{3, 16 * s, 16 * s});
  }
}

TEST_CASE("labnet handles sizes that are not multiples of four") {
  Rng rng(4);
  LabNet net(desk_labnet(4, 2), rng);
  Tensor lr = rng.uniform_tensor({3, 13, 9}, 0.0, 1.0);
  Tensor out = net.forward(lr);
  CHECK(out.shape() == std::vector<int>{3, 26, 18});
  CHECK_THROWS_AS(net.forward(Tensor({3, 3, 12})), ShapeError);
}

TEST_CASE("labnet forward and backward stay finite") {
  Rng rng(5);
  LabNet net(desk_labnet(4, 2, 3), rng);
  Tensor lr = rng.uniform_tensor({3, 12, 12}, 0.0, 1.0);
  Tensor out = net.forward(lr);
  CHECK(all_finite(out));
  Tensor dlr = net.backward(Tensor::full(out.shape(), 1.0 / out.size()));
  CHECK(all_finite(dlr));
  bool any_grad = false;
  net.visit_params("", [&](const std::string&, Param& p) { any_grad = any_grad || max_abs(p.grad) > 0.0; });
  CHECK(any_grad);
  net.visit_params("", [&](const std::string&, Param& p) { CHECK(all_finite(p.grad)); });
}

TEST_CASE("adapter beta=0 makes the denoise side ignore the deblur features") {
  Rng rng(6);
  Adapter adapter(4, rng);
  Tensor f_den = rng.uniform_tensor({4, 6, 6}, -1.0, 1.0);
  Tensor f_deb1 = rng.uniform_tensor({4, 6, 6}, -1.0, 1.0);
  Tensor f_deb2 = rng.uniform_tensor({4, 6, 6}, -1.0, 1.0);
  auto [den1, deb1] = adapter.forward(f_den, f_deb1, 0.8, 0.0);
  auto [den2, deb2] = adapter.forward(f_den, f_deb2, 0.8, 0.0);
  CHECK(max_abs_diff(den1, den2) == 0.0);  // bitwise
  (void)deb1;
  (void)deb2;
}

TEST_CASE("adapter with both knobs zero emits exact zeros") {
  Rng rng(7);
  Adapter adapter(3, rng);
  Tensor f_den = rng.uniform_tensor({3, 4, 4}, -1.0, 1.0);
  Tensor f_deb = rng.uniform_tensor({3, 4, 4}, -1.0, 1.0);
  auto [den, deb] = adapter.forward(f_den, f_deb, 0.0, 0.0);
  CHECK(max_abs(den) == 0.0);
  CHECK(max_abs(deb) == 0.0);
}

TEST_CASE("fusion alpha-only output is independent of the deblur input") {
  Rng rng(8);
  Fusion fusion(4, 2, rng);
  Tensor f_den = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
  Tensor f_deb1 = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
  Tensor f_deb2 = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
  Tensor o1 = fusion.forward(f_den, f_deb1, 1.0, 0.0);
  Tensor o2 = fusion.forward(f_den, f_deb2, 1.0, 0.0);
  CHECK(max_abs_diff(o1, o2) == 0.0);
  CHECK(o1.shape() == std::vector<int>{3, 10, 10});
}

TEST_CASE("fusion pre-refinement features are linear in alpha") {
  Rng rng(9);
  Fusion fusion(4, 2, rng);
  Tensor f_den = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
  Tensor f_deb({4, 5, 5});
  fusion.forward(f_den, f_deb, 0.4, 0.0);
  Tensor tap1 = fusion.pre_refinement();
  fusion.forward(f_den, f_deb, 0.8, 0.0);
  Tensor tap2 = fusion.pre_refinement();
  CHECK(max_abs_diff(scale(tap1, 2.0), tap2) <= 1e-12);
}

TEST_CASE("realnet shape contract and finite backward") {
  Rng rng(10);
  RealNetConfig cfg;
  cfg.channels = 4;
  cfg.scale = 3;
  cfg.blocks = {1, 1};
  cfg.mlfr_variant = 1;
  RealNet net(cfg, rng);
  Tensor lr = rng.uniform_tensor({3, 8, 8}, 0.0, 1.0);
  Tensor out = net.forward(lr);
  CHECK(out.shape() == std::vector<int>{3, 24, 24});
  Tensor dlr = net.backward(Tensor::full(out.shape(), 1e-3));
  CHECK(all_finite(dlr));
}

TEST_CASE("realnet with all beta zero is bitwise independent of deblur weights") {
  RealNetConfig cfg;
  cfg.channels = 4;
  cfg.scale = 2;
  cfg.blocks = {1, 1};
  cfg.mlfr_variant = 1;
  cfg.alpha = {0.7, 0.6, 0.5, 0.9};
  cfg.beta = {0.0, 0.0, 0.0, 0.0};

  Rng rng1(11);
  RealNet net1(cfg, rng1);
  Rng rng2(11);
  RealNet net2(cfg, rng2);
  // Scramble every deblur-side weight of the second net.
  Rng scramble(99);
  net2.visit_deblur_params([&](const std::string&, Param& p) {
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = scramble.uniform(-1.0, 1.0);
  });

  Rng data(12);
  Tensor lr = data.uniform_tensor({3, 8, 8}, 0.0, 1.0);
  Tensor o1 = net1.forward(lr);
  Tensor o2 = net2.forward(lr);
  CHECK(max_abs_diff(o1, o2) == 0.0);

  // With any beta nonzero the deblur weights must matter.
  net1.set_knobs({0.7, 0.6, 0.5, 0.9}, {0.1, 0.0, 0.0, 0.0});
  net2.set_knobs({0.7, 0.6, 0.5, 0.9}, {0.1, 0.0, 0.0, 0.0});
  CHECK(max_abs_diff(net1.forward(lr), net2.forward(lr)) > 0.0);
}

TEST_CASE("model construction is deterministic in the seed") {
  KvConfig cfg;
  cfg.set("model", "labnet");
  cfg.set("channels", "4");
  cfg.set("scale", "2");
  cfg.set("blocks", "1,1,1,1,1,1");
  cfg.set("mlfr.variant", "v1");
  cfg.set("seed", "17");
  auto m1 = build_model(cfg);
  auto m2 = build_model(cfg);
  CHECK(m1->param_count() == m2->param_count());
  std::vector<Param*> p1, p2;
  m1->visit_params([&](const std::string&, Param& p) { p1.push_back(&p); });
  m2->visit_params([&](const std::string&, Param& p) { p2.push_back(&p); });
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(max_abs_diff(p1[i]->value, p2[i]->value) == 0.0);
  }
}

TEST_CASE("checkpoint round trip restores every parameter bit for bit") {
  KvConfig cfg;
  cfg.set("model", "labnet");
  cfg.set("channels", "4");
  cfg.set("scale", "2");
  cfg.set("blocks", "1,1,1,1,1,1");
  cfg.set("mlfr.variant", "v1");
  cfg.set("seed", "3");
  auto model = build_model(cfg);
  const std::string path = temp_path("ta_test_ckpt.tacp");
  save_checkpoint(path, model->model_config(),
                  [&](const ParamVisitor& fn) { model->visit_params(fn); });

  auto loaded = load_model_from_checkpoint(path);
  CHECK(loaded->kind() == "labnet");
  std::vector<Param*> p1, p2;
  model->visit_params([&](const std::string&, Param& p) { p1.push_back(&p); });
  loaded->visit_params([&](const std::string&, Param& p) { p2.push_back(&p); });
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK(max_abs_diff(p1[i]->value, p2[i]->value) == 0.0);

  Rng data(5);
  Tensor lr = data.uniform_tensor({3, 8, 8}, 0.0, 1.0);
  CHECK(max_abs_diff(model->forward(lr), loaded->forward(lr)) == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint load names the first mismatched tensor") {
  KvConfig cfg;
  cfg.set("model", "labnet");
  cfg.set("channels", "4");
  cfg.set("scale", "2");
  cfg.set("blocks", "1,1,1,1,1,1");
  cfg.set("mlfr.variant", "v1");
  cfg.set("seed", "3");
  auto model = build_model(cfg);
  const std::string path = temp_path("ta_test_ckpt_mismatch.tacp");
  // Claim a different channel width in the stored config.
  KvConfig wrong = model->model_config();
  wrong.set("channels", "8");
  save_checkpoint(path, wrong, [&](const ParamVisitor& fn) { model->visit_params(fn); });
  try {
    auto loaded = load_model_from_checkpoint(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("shallow.w") != std::string::npos);
  }
  std::filesystem::remove(path);
}
