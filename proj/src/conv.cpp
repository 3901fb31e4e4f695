#include "ta/conv.hpp"

#include <algorithm>
#include <cmath>

#include "ta/flops.hpp"
#include "ta/ops.hpp"

namespace ta {

namespace {

void require_chw(const Tensor& x, const char* op) {
  if (x.rank() != 3) throw ShapeError(std::string(op) + ": expected (C,H,W) input, got " + x.shape_str());
}

}  // namespace

Tensor depthwise_conv2d(const Tensor& x, const Tensor& weights, int dilation) {
  require_chw(x, "depthwise_conv2d");
  if (weights.rank() != 3 || weights.dim(0) != x.dim(0) || weights.dim(1) != weights.dim(2)) {
    throw ShapeError("depthwise_conv2d: weights " + weights.shape_str() + " do not match input " +
                     x.shape_str());
  }
  const int k = weights.dim(1);
  if (k % 2 == 0) throw ConfigError("depthwise_conv2d: kernel size must be odd, got " + std::to_string(k));
  if (dilation < 1) throw ConfigError("depthwise_conv2d: dilation must be >= 1");

  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int r = (k - 1) / 2;
  Tensor out({C, H, W});
  for (int c = 0; c < C; ++c) {
    const double* in_c = x.data() + static_cast<std::size_t>(c) * H * W;
    double* out_c = out.data() + static_cast<std::size_t>(c) * H * W;
    for (int ti = 0; ti < k; ++ti) {
      const int oi = (ti - r) * dilation;
      const int y0 = std::max(0, -oi), y1 = std::min(H, H - oi);
      for (int tj = 0; tj < k; ++tj) {
        const int oj = (tj - r) * dilation;
        const int x0 = std::max(0, -oj), x1 = std::min(W, W - oj);
        const double w = weights(c, ti, tj);
        if (w == 0.0) continue;
        for (int y = y0; y < y1; ++y) {
          const double* src = in_c + static_cast<std::size_t>(y + oi) * W + oj;
          double* dst = out_c + static_cast<std::size_t>(y) * W;
          for (int px = x0; px < x1; ++px) dst[px] += w * src[px];
        }
      }
    }
  }
  count_flops(static_cast<std::uint64_t>(C) * H * W * k * k);
  return out;
}

Tensor depthwise_conv2d(const Tensor& x, const DepthwiseKernel& kern) {
  return depthwise_conv2d(x, kern.weights, kern.dilation);
}

void depthwise_conv2d_backward(const Tensor& dy, const Tensor& x, const Tensor& weights,
                               int dilation, Tensor& dx, Tensor& dweights) {
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const int k = weights.dim(1);
  const int r = (k - 1) / 2;
  for (int c = 0; c < C; ++c) {
    const double* in_c = x.data() + static_cast<std::size_t>(c) * H * W;
    const double* dy_c = dy.data() + static_cast<std::size_t>(c) * H * W;
    double* dx_c = dx.data() + static_cast<std::size_t>(c) * H * W;
    for (int ti = 0; ti < k; ++ti) {
      const int oi = (ti - r) * dilation;
      const int y0 = std::max(0, -oi), y1 = std::min(H, H - oi);
      for (int tj = 0; tj < k; ++tj) {
        const int oj = (tj - r) * dilation;
        const int x0 = std::max(0, -oj), x1 = std::min(W, W - oj);
        const double w = weights(c, ti, tj);
        double wsum = 0.0;
        for (int y = y0; y < y1; ++y) {
          const double* src = in_c + static_cast<std::size_t>(y + oi) * W + oj;
          double* dsrc = dx_c + static_cast<std::size_t>(y + oi) * W + oj;
          const double* g = dy_c + static_cast<std::size_t>(y) * W;
          for (int px = x0; px < x1; ++px) {
            dsrc[px] += w * g[px];
            wsum += src[px] * g[px];
          }
        }
        dweights(c, ti, tj) += wsum;
      }
    }
  }
  count_flops(2ull * static_cast<std::uint64_t>(C) * H * W * k * k);
}

Tensor pointwise_conv(const Tensor& x, const Tensor& weights) {
  require_chw(x, "pointwise_conv");
  if (weights.rank() != 2 || weights.cols() != x.dim(0)) {
    throw ShapeError("pointwise_conv: weights " + weights.shape_str() + " incompatible with input " +
                     x.shape_str());
  }
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2), Cout = weights.rows();
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  Tensor out({Cout, H, W});
  for (int co = 0; co < Cout; ++co) {
    double* out_c = out.data() + co * hw;
    for (int ci = 0; ci < Cin; ++ci) {
      const double w = weights(co, ci);
      if (w == 0.0) continue;
      const double* in_c = x.data() + ci * hw;
      for (std::size_t i = 0; i < hw; ++i) out_c[i] += w * in_c[i];
    }
  }
  count_flops(static_cast<std::uint64_t>(Cout) * Cin * hw);
  return out;
}

Tensor pointwise_conv(const Tensor& x, const PointwiseKernel& kern) {
  Tensor out = pointwise_conv(x, kern.weights);
  if (kern.bias) {
    const int Cout = out.dim(0);
    const std::size_t hw = static_cast<std::size_t>(out.dim(1)) * out.dim(2);
    for (int co = 0; co < Cout; ++co) {
      const double b = (*kern.bias)[static_cast<std::size_t>(co)];
      double* out_c = out.data() + co * hw;
      for (std::size_t i = 0; i < hw; ++i) out_c[i] += b;
    }
  }
  return out;
}

void pointwise_conv_backward(const Tensor& dy, const Tensor& x, const Tensor& weights,
                             Tensor& dx, Tensor& dweights) {
  const int Cin = x.dim(0), Cout = weights.rows();
  const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  for (int co = 0; co < Cout; ++co) {
    const double* dy_c = dy.data() + co * hw;
    for (int ci = 0; ci < Cin; ++ci) {
      const double w = weights(co, ci);
      double* dx_c = dx.data() + ci * hw;
      const double* in_c = x.data() + ci * hw;
      double wsum = 0.0;
      for (std::size_t i = 0; i < hw; ++i) {
        dx_c[i] += w * dy_c[i];
        wsum += in_c[i] * dy_c[i];
      }
      dweights(co, ci) += wsum;
    }
  }
  count_flops(2ull * static_cast<std::uint64_t>(Cout) * Cin * hw);
}

Tensor conv2d(const Tensor& x, const Tensor& weights, int stride) {
  require_chw(x, "conv2d");
  if (weights.rank() != 4 || weights.dim(1) != x.dim(0) || weights.dim(2) != weights.dim(3)) {
    throw ShapeError("conv2d: weights " + weights.shape_str() + " incompatible with input " +
                     x.shape_str());
  }
  const int k = weights.dim(2);
  if (k % 2 == 0) throw ConfigError("conv2d: kernel size must be odd");
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2), Cout = weights.dim(0);
  const int r = (k - 1) / 2;
  const int Ho = (H + stride - 1) / stride, Wo = (W + stride - 1) / stride;
  Tensor out({Cout, Ho, Wo});
  for (int co = 0; co < Cout; ++co) {
    double* out_c = out.data() + static_cast<std::size_t>(co) * Ho * Wo;
    for (int ci = 0; ci < Cin; ++ci) {
      const double* in_c = x.data() + static_cast<std::size_t>(ci) * H * W;
      for (int ti = 0; ti < k; ++ti) {
        const int oi = ti - r;
        for (int tj = 0; tj < k; ++tj) {
          const int oj = tj - r;
          const double w = weights.data()[((static_cast<std::size_t>(co) * Cin + ci) * k + ti) * k + tj];
          if (w == 0.0) continue;
          for (int yo = 0; yo < Ho; ++yo) {
            const int yi = yo * stride + oi;
            if (yi < 0 || yi >= H) continue;
            const double* src = in_c + static_cast<std::size_t>(yi) * W;
            double* dst = out_c + static_cast<std::size_t>(yo) * Wo;
            for (int xo = 0; xo < Wo; ++xo) {
              const int xi = xo * stride + oj;
              if (xi < 0 || xi >= W) continue;
              dst[xo] += w * src[xi];
            }
          }
        }
      }
    }
  }
  count_flops(static_cast<std::uint64_t>(Cout) * Cin * k * k * Ho * Wo);
  return out;
}

void conv2d_backward(const Tensor& dy, const Tensor& x, const Tensor& weights, int stride,
                     Tensor& dx, Tensor& dweights) {
  const int k = weights.dim(2);
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2), Cout = weights.dim(0);
  const int r = (k - 1) / 2;
  const int Ho = dy.dim(1), Wo = dy.dim(2);
  for (int co = 0; co < Cout; ++co) {
    const double* dy_c = dy.data() + static_cast<std::size_t>(co) * Ho * Wo;
    for (int ci = 0; ci < Cin; ++ci) {
      const double* in_c = x.data() + static_cast<std::size_t>(ci) * H * W;
      double* dx_c = dx.data() + static_cast<std::size_t>(ci) * H * W;
      for (int ti = 0; ti < k; ++ti) {
        const int oi = ti - r;
        for (int tj = 0; tj < k; ++tj) {
          const int oj = tj - r;
          const std::size_t widx = ((static_cast<std::size_t>(co) * Cin + ci) * k + ti) * k + tj;
          const double w = weights.data()[widx];
          double wsum = 0.0;
          for (int yo = 0; yo < Ho; ++yo) {
            const int yi = yo * stride + oi;
            if (yi < 0 || yi >= H) continue;
            const double* src = in_c + static_cast<std::size_t>(yi) * W;
            double* dsrc = dx_c + static_cast<std::size_t>(yi) * W;
            const double* g = dy_c + static_cast<std::size_t>(yo) * Wo;
            for (int xo = 0; xo < Wo; ++xo) {
              const int xi = xo * stride + oj;
              if (xi < 0 || xi >= W) continue;
              dsrc[xi] += w * g[xo];
              wsum += src[xi] * g[xo];
            }
          }
          dweights.data()[widx] += wsum;
        }
      }
    }
  }
  count_flops(2ull * static_cast<std::uint64_t>(Cout) * Cin * k * k * Ho * Wo);
}

Tensor pixel_shuffle(const Tensor& x, int s) {
  require_chw(x, "pixel_shuffle");
  if (s < 1) throw ConfigError("pixel_shuffle: scale must be >= 1");
  const int Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (Cin % (s * s) != 0) {
    throw ShapeError("pixel_shuffle: channels " + std::to_string(Cin) + " not divisible by s^2 = " +
                     std::to_string(s * s));
  }
  const int C = Cin / (s * s);
  Tensor out({C, H * s, W * s});
  for (int c = 0; c < C; ++c)
    for (int dy = 0; dy < s; ++dy)
      for (int dx = 0; dx < s; ++dx) {
        const int src_c = c * s * s + dy * s + dx;
        for (int y = 0; y < H; ++y)
          for (int px = 0; px < W; ++px) out(c, y * s + dy, px * s + dx) = x(src_c, y, px);
      }
  return out;
}

Tensor pixel_unshuffle(const Tensor& x, int s) {
  require_chw(x, "pixel_unshuffle");
  const int C = x.dim(0), Hs = x.dim(1), Ws = x.dim(2);
  if (Hs % s != 0 || Ws % s != 0) {
    throw ShapeError("pixel_unshuffle: spatial dims not divisible by " + std::to_string(s));
  }
  const int H = Hs / s, W = Ws / s;
  Tensor out({C * s * s, H, W});
  for (int c = 0; c < C; ++c)
    for (int dy = 0; dy < s; ++dy)
      for (int dx = 0; dx < s; ++dx) {
        const int dst_c = c * s * s + dy * s + dx;
        for (int y = 0; y < H; ++y)
          for (int px = 0; px < W; ++px) out(dst_c, y, px) = x(c, y * s + dy, px * s + dx);
      }
  return out;
}

Tensor channel_layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  require_chw(x, "channel_layer_norm");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  constexpr double eps = 1e-6;
  Tensor out({C, H, W});
  for (std::size_t p = 0; p < hw; ++p) {
    double mu = 0.0;
    for (int c = 0; c < C; ++c) mu += x.data()[c * hw + p];
    mu /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) {
      const double d = x.data()[c * hw + p] - mu;
      var += d * d;
    }
    var /= C;
    const double istd = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < C; ++c) {
      const double xhat = (x.data()[c * hw + p] - mu) * istd;
      out.data()[c * hw + p] = gain[static_cast<std::size_t>(c)] * xhat + bias[static_cast<std::size_t>(c)];
    }
  }
  count_flops(4ull * x.size());
  return out;
}

void channel_layer_norm_backward(const Tensor& dy, const Tensor& x, const Tensor& gain,
                                 Tensor& dx, Tensor& dgain, Tensor& dbias) {
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  constexpr double eps = 1e-6;
  for (std::size_t p = 0; p < hw; ++p) {
    double mu = 0.0;
    for (int c = 0; c < C; ++c) mu += x.data()[c * hw + p];
    mu /= C;
    double var = 0.0;
    for (int c = 0; c < C; ++c) {
      const double d = x.data()[c * hw + p] - mu;
      var += d * d;
    }
    var /= C;
    const double istd = 1.0 / std::sqrt(var + eps);

    // dxhat, then the two coupled reductions of the layer-norm Jacobian.
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (int c = 0; c < C; ++c) {
      const double xhat = (x.data()[c * hw + p] - mu) * istd;
      const double dxhat = dy.data()[c * hw + p] * gain[static_cast<std::size_t>(c)];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
      dgain[static_cast<std::size_t>(c)] += dy.data()[c * hw + p] * xhat;
      dbias[static_cast<std::size_t>(c)] += dy.data()[c * hw + p];
    }
    for (int c = 0; c < C; ++c) {
      const double xhat = (x.data()[c * hw + p] - mu) * istd;
      const double dxhat = dy.data()[c * hw + p] * gain[static_cast<std::size_t>(c)];
      dx.data()[c * hw + p] +=
          istd * (dxhat - sum_dxhat / C - xhat * sum_dxhat_xhat / C);
    }
  }
}

Tensor channel_attention(const Tensor& x, const Tensor& reduce, const Tensor& expand) {
  require_chw(x, "channel_attention");
  const int C = x.dim(0);
  if (reduce.rows() != C || expand.cols() != C || reduce.cols() != expand.rows()) {
    throw ShapeError("channel_attention: weights " + reduce.shape_str() + ", " + expand.shape_str() +
                     " incompatible with input " + x.shape_str());
  }
  const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  Tensor z({1, C});
  for (int c = 0; c < C; ++c) {
    double s = 0.0;
    const double* in_c = x.data() + c * hw;
    for (std::size_t i = 0; i < hw; ++i) s += in_c[i];
    z(0, c) = s / static_cast<double>(hw);
  }
  Tensor h = matmul(z, reduce);
  Tensor g = logistic(matmul(relu(h), expand));
  Tensor out = x;
  for (int c = 0; c < C; ++c) {
    double* out_c = out.data() + c * hw;
    const double gc = g(0, c);
    for (std::size_t i = 0; i < hw; ++i) out_c[i] *= gc;
  }
  count_flops(2ull * x.size());
  return out;
}

Tensor channel_attention(const Tensor& x, const ChannelAttentionWeights& w) {
  return channel_attention(x, w.reduce, w.expand);
}

void channel_attention_backward(const Tensor& dy, const Tensor& x, const Tensor& reduce,
                                const Tensor& expand, Tensor& dx, Tensor& dreduce,
                                Tensor& dexpand) {
  const int C = x.dim(0);
  const std::size_t hw = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  // Recompute the squeeze path (cheap relative to the spatial pass).
  Tensor z({1, C});
  for (int c = 0; c < C; ++c) {
    double s = 0.0;
    const double* in_c = x.data() + c * hw;
    for (std::size_t i = 0; i < hw; ++i) s += in_c[i];
    z(0, c) = s / static_cast<double>(hw);
  }
  Tensor h = matmul(z, reduce);
  Tensor r = relu(h);
  Tensor g = logistic(matmul(r, expand));

  Tensor dg({1, C});
  for (int c = 0; c < C; ++c) {
    const double* dy_c = dy.data() + c * hw;
    const double* in_c = x.data() + c * hw;
    double* dx_c = dx.data() + c * hw;
    const double gc = g(0, c);
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      s += dy_c[i] * in_c[i];
      dx_c[i] += gc * dy_c[i];
    }
    dg(0, c) = s;
  }
  Tensor ds = logistic_backward(dg, g);
  Tensor dr({1, expand.rows()});
  Tensor dexp_local({expand.rows(), expand.cols()});
  matmul_backward(ds, r, expand, dr, dexp_local);
  for (std::size_t i = 0; i < dexp_local.size(); ++i) dexpand[i] += dexp_local[i];
  Tensor dh = relu_backward(dr, h);
  Tensor dz({1, C});
  Tensor dred_local({reduce.rows(), reduce.cols()});
  matmul_backward(dh, z, reduce, dz, dred_local);
  for (std::size_t i = 0; i < dred_local.size(); ++i) dreduce[i] += dred_local[i];
  const double inv_hw = 1.0 / static_cast<double>(hw);
  for (int c = 0; c < C; ++c) {
    double* dx_c = dx.data() + c * hw;
    const double v = dz(0, c) * inv_hw;
    for (std::size_t i = 0; i < hw; ++i) dx_c[i] += v;
  }
}

Tensor reflect_pad_br(const Tensor& x, int pad_h, int pad_w) {
  require_chw(x, "reflect_pad_br");
  const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (pad_h >= H || pad_w >= W) {
    throw ShapeError("reflect_pad_br: padding must be smaller than the input");
  }
  if (pad_h == 0 && pad_w == 0) return x;
  Tensor out({C, H + pad_h, W + pad_w});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H + pad_h; ++y) {
      const int sy = y < H ? y : 2 * H - 2 - y;
      for (int px = 0; px < W + pad_w; ++px) {
        const int sx = px < W ? px : 2 * W - 2 - px;
        out(c, y, px) = x(c, sy, sx);
      }
    }
  return out;
}

Tensor reflect_pad_br_backward(const Tensor& dy, int orig_h, int orig_w) {
  const int C = dy.dim(0), Hp = dy.dim(1), Wp = dy.dim(2);
  Tensor dx({C, orig_h, orig_w});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < Hp; ++y) {
      const int sy = y < orig_h ? y : 2 * orig_h - 2 - y;
      for (int px = 0; px < Wp; ++px) {
        const int sx = px < orig_w ? px : 2 * orig_w - 2 - px;
        dx(c, sy, sx) += dy(c, y, px);
      }
    }
  return dx;
}

Tensor crop(const Tensor& x, int h, int w) {
  require_chw(x, "crop");
  if (h > x.dim(1) || w > x.dim(2)) throw ShapeError("crop: target larger than input");
  if (h == x.dim(1) && w == x.dim(2)) return x;
  Tensor out({x.dim(0), h, w});
  for (int c = 0; c < x.dim(0); ++c)
    for (int y = 0; y < h; ++y)
      for (int px = 0; px < w; ++px) out(c, y, px) = x(c, y, px);
  return out;
}

Tensor crop_backward(const Tensor& dy, int orig_h, int orig_w) {
  Tensor dx({dy.dim(0), orig_h, orig_w});
  for (int c = 0; c < dy.dim(0); ++c)
    for (int y = 0; y < dy.dim(1); ++y)
      for (int px = 0; px < dy.dim(2); ++px) dx(c, y, px) = dy(c, y, px);
  return dx;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const int H = parts[0].dim(1), W = parts[0].dim(2);
  int C = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 3 || p.dim(1) != H || p.dim(2) != W) {
      throw ShapeError("concat_channels: spatial mismatch " + p.shape_str());
    }
    C += p.dim(0);
  }
  Tensor out({C, H, W});
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data(), p.data() + p.size(), out.data() + offset);
    offset += p.size();
  }
  return out;
}

std::vector<Tensor> split_channels(const Tensor& x, const std::vector<int>& widths) {
  int total = 0;
  for (int w : widths) total += w;
  if (total != x.dim(0)) throw ShapeError("split_channels: widths do not sum to channel count");
  std::vector<Tensor> parts;
  std::size_t offset = 0;
  for (int w : widths) {
    Tensor p({w, x.dim(1), x.dim(2)});
    std::copy(x.data() + offset, x.data() + offset + p.size(), p.data());
    offset += p.size();
    parts.push_back(std::move(p));
  }
  return parts;
}

}  // namespace ta
