#include "ta/gradsuite.hpp"

#include <functional>

#include "ta/attention.hpp"
#include "ta/conv.hpp"
#include "ta/gradcheck.hpp"
#include "ta/layers.hpp"
#include "ta/mlfr.hpp"
#include "ta/networks.hpp"
#include "ta/ops.hpp"
#include "ta/rng.hpp"
#include "ta/train_utils.hpp"

namespace ta {

namespace {

GradSuiteResult make_result(const std::string& op, const GradCheckReport& rep, double tol) {
  GradSuiteResult r;
  r.op = op;
  r.max_rel_err = rep.max_rel_err;
  r.coords = rep.coords_checked;
  r.tolerance = tol;
  r.pass = rep.max_rel_err <= tol;
  r.worst_param = rep.worst_param;
  r.worst_coord = rep.worst_coord;
  return r;
}

}  // namespace

std::vector<GradSuiteResult> run_grad_suite(std::uint64_t seed, bool inject_fault) {
  std::vector<GradSuiteResult> results;
  Rng rng(seed);

  {  // matmul
    Param a(rng.uniform_tensor({4, 3}, -1.0, 1.0), "a");
    Param b(rng.uniform_tensor({3, 5}, -1.0, 1.0), "b");
    Tensor r = rng.uniform_tensor({4, 5}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor c = matmul(a.value, b.value);
      const double loss = dot(c, r);
      if (backward) matmul_backward(r, a.value, b.value, a.grad, b.grad);
      return loss;
    };
    results.push_back(make_result("matmul", grad_check(f, {&a, &b}), 1e-7));
  }
  {  // row_softmax of a linear map
    Param w(rng.uniform_tensor({4, 4}, -1.0, 1.0), "w");
    Param x(rng.uniform_tensor({4, 4}, -1.0, 1.0), "x");
    auto f = [&](bool backward) {
      Tensor wx = matmul(w.value, x.value);
      Tensor y = row_softmax(wx);
      const double loss = sum(y) + dot(y, wx) * 0.25;  // break softmax-sum degeneracy
      if (backward) {
        Tensor dy = Tensor::full(y.shape(), 1.0);
        axpy(0.25, wx, dy);
        Tensor dwx = row_softmax_backward(dy, y);
        axpy(0.25, y, dwx);
        matmul_backward(dwx, w.value, x.value, w.grad, x.grad);
      }
      return loss;
    };
    results.push_back(make_result("row_softmax", grad_check(f, {&w, &x}), 1e-5));
  }
  {  // relu
    Param x(rng.uniform_tensor({5, 5}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({5, 5}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = relu(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, relu_backward(r, x.value), x.grad);
      return loss;
    };
    results.push_back(make_result("relu", grad_check(f, {&x}), 1e-6));
  }
  {  // gelu
    Param x(rng.uniform_tensor({5, 5}, -2.0, 2.0), "x");
    Tensor r = rng.uniform_tensor({5, 5}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = gelu(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, gelu_backward(r, x.value), x.grad);
      return loss;
    };
    results.push_back(make_result("gelu", grad_check(f, {&x}), 1e-6));
  }
  {  // logistic
    Param x(rng.uniform_tensor({5, 5}, -2.0, 2.0), "x");
    Tensor r = rng.uniform_tensor({5, 5}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = logistic(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, logistic_backward(r, y), x.grad);
      return loss;
    };
    results.push_back(make_result("logistic", grad_check(f, {&x}), 1e-6));
  }
  {  // l1 loss wrt predictions
    Param pred(rng.uniform_tensor({4, 4}, -1.0, 1.0), "pred");
    Tensor target = rng.uniform_tensor({4, 4}, -1.0, 1.0);
    auto f = [&](bool backward) {
      const double loss = l1_loss(pred.value, target);
      if (backward) axpy(1.0, l1_loss_backward(pred.value, target), pred.grad);
      return loss;
    };
    results.push_back(make_result("l1_loss", grad_check(f, {&pred}), 1e-6));
  }
  {  // pointwise conv
    Param x(rng.uniform_tensor({3, 4, 5}, -1.0, 1.0), "x");
    Param w(rng.uniform_tensor({4, 3}, -1.0, 1.0), "w");
    Tensor r = rng.uniform_tensor({4, 4, 5}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = pointwise_conv(x.value, w.value);
      const double loss = dot(y, r);
      if (backward) pointwise_conv_backward(r, x.value, w.value, x.grad, w.grad);
      return loss;
    };
    results.push_back(make_result("pointwise_conv", grad_check(f, {&x, &w}), 1e-6));
  }
  {  // depthwise 3x3
    Param x(rng.uniform_tensor({3, 6, 6}, -1.0, 1.0), "x");
    Param w(rng.uniform_tensor({3, 3, 3}, -1.0, 1.0), "w");
    Tensor r = rng.uniform_tensor({3, 6, 6}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = depthwise_conv2d(x.value, w.value, 1);
      const double loss = dot(y, r);
      if (backward) depthwise_conv2d_backward(r, x.value, w.value, 1, x.grad, w.grad);
      return loss;
    };
    results.push_back(make_result("depthwise_conv2d", grad_check(f, {&x, &w}), 1e-6));
  }
  {  // dilated depthwise 9x9
    Param x(rng.uniform_tensor({2, 12, 12}, -1.0, 1.0), "x");
    Param w(rng.uniform_tensor({2, 9, 9}, -0.5, 0.5), "w");
    Tensor r = rng.uniform_tensor({2, 12, 12}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = depthwise_conv2d(x.value, w.value, 2);
      const double loss = dot(y, r);
      if (backward) depthwise_conv2d_backward(r, x.value, w.value, 2, x.grad, w.grad);
      return loss;
    };
    results.push_back(make_result("depthwise_dilated", grad_check(f, {&x, &w}), 1e-6));
  }
  {  // full 3x3 conv
    Param x(rng.uniform_tensor({2, 5, 5}, -1.0, 1.0), "x");
    Param w(rng.uniform_tensor({3, 2, 3, 3}, -0.5, 0.5), "w");
    Tensor r = rng.uniform_tensor({3, 5, 5}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = conv2d(x.value, w.value, 1);
      const double loss = dot(y, r);
      if (backward) conv2d_backward(r, x.value, w.value, 1, x.grad, w.grad);
      return loss;
    };
    results.push_back(make_result("conv2d_3x3", grad_check(f, {&x, &w}), 1e-6));
  }
  {  // strided 3x3 conv
    Param x(rng.uniform_tensor({2, 6, 6}, -1.0, 1.0), "x");
    Param w(rng.uniform_tensor({2, 2, 3, 3}, -0.5, 0.5), "w");
    Tensor r = rng.uniform_tensor({2, 3, 3}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = conv2d(x.value, w.value, 2);
      const double loss = dot(y, r);
      if (backward) conv2d_backward(r, x.value, w.value, 2, x.grad, w.grad);
      return loss;
    };
    results.push_back(make_result("conv2d_3x3_stride2", grad_check(f, {&x, &w}), 1e-6));
  }
  {  // channel layer norm
    Param x(rng.uniform_tensor({4, 3, 3}, -1.0, 1.0), "x");
    Param gain(rng.uniform_tensor({4}, 0.5, 1.5), "gain");
    Param bias(rng.uniform_tensor({4}, -0.5, 0.5), "bias");
    Tensor r = rng.uniform_tensor({4, 3, 3}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = channel_layer_norm(x.value, gain.value, bias.value);
      const double loss = dot(y, r);
      if (backward) channel_layer_norm_backward(r, x.value, gain.value, x.grad, gain.grad, bias.grad);
      return loss;
    };
    results.push_back(make_result("channel_layer_norm", grad_check(f, {&x, &gain, &bias}), 1e-5));
  }
  {  // channel attention
    Param x(rng.uniform_tensor({4, 3, 3}, -1.0, 1.0), "x");
    Param red(rng.uniform_tensor({4, 1}, -1.0, 1.0), "reduce");
    Param exp_(rng.uniform_tensor({1, 4}, -1.0, 1.0), "expand");
    Tensor r = rng.uniform_tensor({4, 3, 3}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = channel_attention(x.value, red.value, exp_.value);
      const double loss = dot(y, r);
      if (backward) channel_attention_backward(r, x.value, red.value, exp_.value, x.grad, red.grad, exp_.grad);
      return loss;
    };
    results.push_back(make_result("channel_attention", grad_check(f, {&x, &red, &exp_}), 1e-5));
  }
  {  // gdfn
    Rng init(seed + 11);
    GdfnLayer layer(4, init);
    Param x(rng.uniform_tensor({4, 4, 4}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({4, 4, 4}, -1.0, 1.0);
    std::vector<Param*> params = params_of(layer);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor y = layer.forward(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, layer.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("gdfn", grad_check(f, params), 1e-4));
  }
  {  // eigen extractor
    Rng init(seed + 12);
    EigenExtractor e(6, init);
    Param x(rng.uniform_tensor({5, 6}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({6}, -1.0, 1.0);
    std::vector<Param*> params = params_of(e);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor b = e.forward(x.value);
      const double loss = dot(b, r);
      if (backward) axpy(1.0, e.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("extract_eigens", grad_check(f, params), 1e-5));
  }
  {  // exact attention
    Rng init(seed + 13);
    QkvWeights w = QkvWeights::random(4, init);
    Param x(rng.uniform_tensor({5, 4}, -1.0, 1.0), "x");
    Param wq(w.w_q, "w_q"), wk(w.w_k, "w_k"), wv(w.w_v, "w_v");
    Tensor r = rng.uniform_tensor({5, 4}, -1.0, 1.0);
    auto f = [&](bool backward) {
      QkvWeights cur{wq.value, wk.value, wv.value};
      Tensor y = nla_forward(x.value, cur);
      const double loss = dot(y, r);
      if (backward) {
        QkvGrads g = nla_backward(r, x.value, cur);
        axpy(1.0, g.dx, x.grad);
        axpy(1.0, g.dw_q, wq.grad);
        axpy(1.0, g.dw_k, wk.grad);
        axpy(1.0, g.dw_v, wv.grad);
      }
      return loss;
    };
    results.push_back(make_result("nla_forward", grad_check(f, {&x, &wq, &wk, &wv}), 1e-5));
  }
  {  // exponential kernel
    Rng init(seed + 14);
    QkvWeights w = QkvWeights::random(4, init);
    Param x(rng.uniform_tensor({5, 4}, -0.5, 0.5), "x");
    Param wq(w.w_q, "w_q"), wk(w.w_k, "w_k"), wv(w.w_v, "w_v");
    Tensor r = rng.uniform_tensor({5, 4}, -1.0, 1.0);
    auto f = [&](bool backward) {
      QkvWeights cur{wq.value, wk.value, wv.value};
      Tensor y = exp_kernel_forward(x.value, cur, 5.0);
      const double loss = dot(y, r);
      if (backward) {
        QkvGrads g = exp_kernel_backward(r, x.value, cur, 5.0);
        axpy(1.0, g.dx, x.grad);
        axpy(1.0, g.dw_q, wq.grad);
        axpy(1.0, g.dw_k, wk.grad);
        axpy(1.0, g.dw_v, wv.grad);
      }
      return loss;
    };
    results.push_back(make_result("exp_kernel", grad_check(f, {&x, &wq, &wk, &wv}), 1e-5));
  }
  for (int which = 0; which < 2; ++which) {  // taylor reference + linear, order 3
    Rng init(seed + 15);
    QkvWeights w = QkvWeights::random(4, init);
    Param x(rng.uniform_tensor({5, 4}, -0.7, 0.7), "x");
    Param wq(w.w_q, "w_q"), wk(w.w_k, "w_k"), wv(w.w_v, "w_v");
    Tensor r = rng.uniform_tensor({5, 4}, -1.0, 1.0);
    const bool linear = which == 1;
    auto f = [&, linear](bool backward) {
      QkvWeights cur{wq.value, wk.value, wv.value};
      Tensor y = linear ? taylor_attention_linear(x.value, cur, TaylorOrder(3), 7.0)
                        : taylor_attention_reference(x.value, cur, TaylorOrder(3), 7.0);
      const double loss = dot(y, r);
      if (backward) {
        QkvGrads g = linear
                         ? taylor_attention_linear_backward(r, x.value, cur, TaylorOrder(3), 7.0)
                         : taylor_attention_reference_backward(r, x.value, cur, TaylorOrder(3), 7.0);
        axpy(1.0, g.dx, x.grad);
        axpy(1.0, g.dw_q, wq.grad);
        axpy(1.0, g.dw_k, wk.grad);
        axpy(1.0, g.dw_v, wv.grad);
      }
      return loss;
    };
    results.push_back(make_result(linear ? "taylor_linear" : "taylor_reference",
                                  grad_check(f, {&x, &wq, &wk, &wv}), 1e-5));
  }
  {  // full STEA unit
    Rng init(seed + 17);
    SteaUnit unit(4, 2, true, init, 16.0);
    Param x(rng.uniform_tensor({4, 4, 4}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({4, 4, 4}, -1.0, 1.0);
    std::vector<Param*> params = params_of(unit);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor y = unit.forward(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, unit.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("stea_unit", grad_check(f, params), 1e-4));
  }
  {  // MLFR v3
    Rng init(seed + 18);
    MlfrBlock block(4, MlfrVariant(3), init);
    Param x(rng.uniform_tensor({4, 5, 5}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
    std::vector<Param*> params = params_of(block);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor y = block.forward(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, block.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("mlfr", grad_check(f, params), 1e-4));
  }
  {  // LSTEA block on (8,6,6)
    Rng init(seed + 19);
    LsteaBlock block(8, 2, MlfrVariant(3), init, 36.0);
    Param x(rng.uniform_tensor({8, 6, 6}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({8, 6, 6}, -1.0, 1.0);
    std::vector<Param*> params = params_of(block);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor y = block.forward(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, block.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("lstea_block", grad_check(f, params), 1e-4));
  }
  {  // adapter (both sides)
    Rng init(seed + 20);
    Adapter adapter(4, init);
    Param fden(rng.uniform_tensor({4, 5, 5}, -1.0, 1.0), "f_den");
    Param fdeb(rng.uniform_tensor({4, 5, 5}, -1.0, 1.0), "f_deb");
    Tensor r1 = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
    Tensor r2 = rng.uniform_tensor({4, 5, 5}, -1.0, 1.0);
    std::vector<Param*> params = params_of(adapter);
    params.push_back(&fden);
    params.push_back(&fdeb);
    auto f = [&](bool backward) {
      auto [od, ob] = adapter.forward(fden.value, fdeb.value, 0.8, 0.6);
      const double loss = dot(od, r1) + dot(ob, r2);
      if (backward) {
        auto [dd, db] = adapter.backward(r1, r2);
        axpy(1.0, dd, fden.grad);
        axpy(1.0, db, fdeb.grad);
      }
      return loss;
    };
    results.push_back(make_result("adapter", grad_check(f, params), 1e-4));
  }
  {  // fusion head
    Rng init(seed + 21);
    Fusion fusion(4, 2, init);
    Param fden(rng.uniform_tensor({4, 4, 4}, -1.0, 1.0), "f_den");
    Param fdeb(rng.uniform_tensor({4, 4, 4}, -1.0, 1.0), "f_deb");
    Tensor r = rng.uniform_tensor({3, 8, 8}, -1.0, 1.0);
    std::vector<Param*> params = params_of(fusion);
    params.push_back(&fden);
    params.push_back(&fdeb);
    auto f = [&](bool backward) {
      Tensor y = fusion.forward(fden.value, fdeb.value, 0.7, 0.9);
      const double loss = dot(y, r);
      if (backward) {
        auto [dd, db] = fusion.backward(r);
        axpy(1.0, dd, fden.grad);
        axpy(1.0, db, fdeb.grad);
      }
      return loss;
    };
    results.push_back(make_result("fusion", grad_check(f, params), 1e-4));
  }
  {  // one-block desk LabNet end to end
    Rng init(seed + 22);
    LabNetConfig cfg;
    cfg.channels = 2;
    cfg.scale = 2;
    cfg.blocks = {1, 1, 1, 1, 1, 1};
    cfg.mlfr_variant = 1;
    cfg.taylor_order = 2;
    LabNet net(cfg, init);
    Param x(rng.uniform_tensor({3, 8, 8}, 0.0, 1.0), "lr");
    Tensor r = rng.uniform_tensor({3, 16, 16}, -1.0, 1.0);
    std::vector<Param*> params = params_of(net);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor y = net.forward(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, net.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("labnet_1block", grad_check(f, params), 1e-4));
  }
  {  // small RealNet end to end
    Rng init(seed + 23);
    RealNetConfig cfg;
    cfg.channels = 2;
    cfg.scale = 2;
    cfg.blocks = {1, 1};
    cfg.mlfr_variant = 1;
    cfg.alpha = {0.9, 0.8, 0.7, 0.6};
    cfg.beta = {0.5, 0.4, 0.3, 0.2};
    RealNet net(cfg, init);
    Param x(rng.uniform_tensor({3, 6, 6}, 0.0, 1.0), "lr");
    Tensor r = rng.uniform_tensor({3, 12, 12}, -1.0, 1.0);
    std::vector<Param*> params = params_of(net);
    params.push_back(&x);
    auto f = [&](bool backward) {
      Tensor y = net.forward(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.0, net.backward(r), x.grad);
      return loss;
    };
    results.push_back(make_result("realnet", grad_check(f, params), 1e-4));
  }

  if (inject_fault) {
    // Fixture with a deliberately corrupted backward; must be reported red.
    Param x(rng.uniform_tensor({4, 4}, -1.0, 1.0), "x");
    Tensor r = rng.uniform_tensor({4, 4}, -1.0, 1.0);
    auto f = [&](bool backward) {
      Tensor y = relu(x.value);
      const double loss = dot(y, r);
      if (backward) axpy(1.01, relu_backward(r, x.value), x.grad);
      return loss;
    };
    results.push_back(make_result("fault_fixture", grad_check(f, {&x}), 1e-4));
  }
  return results;
}

}  // namespace ta
