#pragma once

#include "crloc/image.hpp"
#include "crloc/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crloc::neural {

enum class LayerKind { conv, maxpool, relu, flatten, dense };

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int filters = 0;  // conv
  int kernel = 0;   // conv
  int units = 0;    // dense
  bool trainable = true;

  static LayerSpec conv(int filters, int kernel) {
    return {LayerKind::conv, filters, kernel, 0, true};
  }
  static LayerSpec maxpool() { return {LayerKind::maxpool}; }
  static LayerSpec relu() { return {LayerKind::relu}; }
  static LayerSpec flatten() { return {LayerKind::flatten}; }
  static LayerSpec dense(int units) { return {LayerKind::dense, 0, 0, units, true}; }
};

struct Shape {
  int h = 0, w = 0, c = 0;
  int flat() const { return h * w * c; }
  bool operator==(const Shape&) const = default;
};

/// Ordered layer list plus the (H, W, 1) input. The final layer must emit
/// exactly 2 values, the (x, y) center in pixels.
struct NetworkSpec {
  int input_h = 0;
  int input_w = 0;
  std::vector<LayerSpec> layers;

  /// Full-scale preset: 7 conv layers (64,64,128,128,256,256,512) on
  /// 180x180 inputs, 2x2 max-pool after convs 1-6, dense(256) head.
  static NetworkSpec paper();

  /// Desk-scale preset: 4 conv layers (8,16,32,32) on 64x64 inputs,
  /// pools after convs 1-3, dense(64) head.
  static NetworkSpec desk();

  std::string to_text() const;
  static NetworkSpec from_text(const std::string& text);
};

struct AdamParams {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Mean over the batch and over the 2 coordinates of squared error.
double loss_mse(std::span<const Vec2> pred, std::span<const Vec2> truth);

/// Feedforward conv/dense regression network. Conv layers are valid
/// cross-correlation with stride 1 plus per-filter bias; pooling is 2x2
/// stride 2; activation is ReLU. Feature maps are (H*W, C) matrices with
/// row index y*W + x; flatten is therefore channel-planar.
///
/// Training instantiates Scalar = float; Scalar = double is used for
/// finite-difference gradient checks.
template <typename Scalar>
class Network {
public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Network() = default;

  /// He-normal weight init (zero biases), seeded and reproducible.
  Network(NetworkSpec spec, uint64_t init_seed) : spec_(std::move(spec)), init_seed_(init_seed) {
    build_shapes();
    Rng rng(init_seed);
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      Layer& l = layers_[li];
      if (!is_parametric(spec_.layers[li].kind)) continue;
      const double stddev = std::sqrt(2.0 / static_cast<double>(l.W.rows()));
      for (Eigen::Index j = 0; j < l.W.cols(); ++j)
        for (Eigen::Index i = 0; i < l.W.rows(); ++i)
          l.W(i, j) = static_cast<Scalar>(rng.normal(0.0, stddev));
      l.b.setZero();
      l.mW.setZero(l.W.rows(), l.W.cols());
      l.vW.setZero(l.W.rows(), l.W.cols());
      l.mb.setZero(l.b.size());
      l.vb.setZero(l.b.size());
    }
  }

  const NetworkSpec& spec() const { return spec_; }
  uint64_t init_seed() const { return init_seed_; }
  uint64_t adam_step_count() const { return adam_t_; }
  uint64_t& adam_step_count() { return adam_t_; }
  Shape output_shape() const { return shapes_.back(); }

  bool has_params(int layer) const { return is_parametric(spec_.layers[layer].kind); }
  Mat& weights(int layer) { return layers_[layer].W; }
  const Mat& weights(int layer) const { return layers_[layer].W; }
  Vec& bias(int layer) { return layers_[layer].b; }
  const Vec& bias(int layer) const { return layers_[layer].b; }
  Mat& adam_m(int layer) { return layers_[layer].mW; }
  const Mat& adam_m(int layer) const { return layers_[layer].mW; }
  Mat& adam_v(int layer) { return layers_[layer].vW; }
  const Mat& adam_v(int layer) const { return layers_[layer].vW; }
  Vec& adam_mb(int layer) { return layers_[layer].mb; }
  const Vec& adam_mb(int layer) const { return layers_[layer].mb; }
  Vec& adam_vb(int layer) { return layers_[layer].vb; }
  const Vec& adam_vb(int layer) const { return layers_[layer].vb; }

  void set_trainable(std::span<const int> layer_indices, bool flag) {
    for (int idx : layer_indices) {
      if (idx < 0 || idx >= static_cast<int>(spec_.layers.size()))
        throw std::out_of_range("set_trainable: layer index " + std::to_string(idx));
      spec_.layers[idx].trainable = flag;
    }
  }

  /// Marks the first `n` conv layers (and with them their blocks) frozen.
  void freeze_first_conv_blocks(int n) {
    int seen = 0;
    for (auto& l : spec_.layers) {
      if (l.kind == LayerKind::conv) {
        if (seen >= n) break;
        l.trainable = false;
        ++seen;
      }
    }
    if (seen < n) throw std::out_of_range("freeze_first_conv_blocks: not enough conv layers");
  }

  Vec2 predict(const ImagePatch& img) const {
    Vec out = forward(to_input(img), nullptr);
    return Vec2(static_cast<double>(out(0)), static_cast<double>(out(1)));
  }

  /// Feature matrix ((H*W) x C, or (units) x 1 past the flatten) produced
  /// by the given layer for one input.
  Mat activations(const ImagePatch& img, int layer) const {
    if (layer < 0 || layer >= static_cast<int>(spec_.layers.size()))
      throw std::out_of_range("activations: layer index");
    std::vector<Tape> tape(spec_.layers.size());
    forward(to_input(img), &tape);
    return tape[layer].out;
  }

  std::vector<Vec2> predict_batch(std::span<const ImagePatch> imgs) const {
    std::vector<Vec2> out;
    out.reserve(imgs.size());
    for (const ImagePatch& im : imgs) out.push_back(predict(im));
    return out;
  }

  /// Per-layer parameter gradients; entries for frozen or non-parametric
  /// layers stay empty.
  struct Gradients {
    std::vector<Mat> gW;
    std::vector<Vec> gb;
  };

  /// Exact gradients of loss_mse over the batch w.r.t. every trainable
  /// parameter. Samples are accumulated in index order.
  Gradients backward(std::span<const ImagePatch> batch, std::span<const Vec2> truth,
                     double* loss_out = nullptr) const {
    if (batch.empty() || batch.size() != truth.size())
      throw std::invalid_argument("backward: empty batch or size mismatch");
    Gradients g;
    g.gW.resize(spec_.layers.size());
    g.gb.resize(spec_.layers.size());
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      if (is_parametric(spec_.layers[li].kind) && spec_.layers[li].trainable) {
        g.gW[li].setZero(layers_[li].W.rows(), layers_[li].W.cols());
        g.gb[li].setZero(layers_[li].b.size());
      }
    }
    double loss = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<Tape> tape(spec_.layers.size());
    for (size_t s = 0; s < batch.size(); ++s) {
      Mat input = to_input(batch[s]);
      Vec out = forward(input, &tape);
      const double ex = static_cast<double>(out(0)) - truth[s].x();
      const double ey = static_cast<double>(out(1)) - truth[s].y();
      loss += (ex * ex + ey * ey) / 2.0 * inv_b;
      Mat dOut(2, 1);
      dOut(0, 0) = static_cast<Scalar>(ex * inv_b);
      dOut(1, 0) = static_cast<Scalar>(ey * inv_b);
      backprop_sample(input, tape, dOut, g);
    }
    if (loss_out) *loss_out = loss;
    return g;
  }

  /// Bias-corrected Adam update; the step counter advances once per call.
  /// Frozen layers are skipped entirely.
  void adam_step(const Gradients& g, const AdamParams& p) {
    adam_t_ += 1;
    const double t = static_cast<double>(adam_t_);
    const double c1 = 1.0 - std::pow(p.beta1, t);
    const double c2 = 1.0 - std::pow(p.beta2, t);
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      if (!is_parametric(spec_.layers[li].kind) || !spec_.layers[li].trainable) continue;
      if (g.gW[li].size() == 0) continue;
      Layer& l = layers_[li];
      const Scalar b1 = static_cast<Scalar>(p.beta1), b2 = static_cast<Scalar>(p.beta2);
      l.mW = b1 * l.mW + (1 - b1) * g.gW[li];
      l.vW = b2 * l.vW + (1 - b2) * g.gW[li].cwiseProduct(g.gW[li]);
      l.mb = b1 * l.mb + (1 - b1) * g.gb[li];
      l.vb = b2 * l.vb + (1 - b2) * g.gb[li].cwiseProduct(g.gb[li]);
      const Scalar lr1 = static_cast<Scalar>(p.learning_rate / c1);
      const Scalar inv_c2 = static_cast<Scalar>(1.0 / c2);
      const Scalar eps = static_cast<Scalar>(p.epsilon);
      l.W -= lr1 * (l.mW.array() / ((l.vW.array() * inv_c2).sqrt() + eps)).matrix();
      l.b -= lr1 * (l.mb.array() / ((l.vb.array() * inv_c2).sqrt() + eps)).matrix();
    }
  }

  double train_step(std::span<const ImagePatch> batch, std::span<const Vec2> truth,
                    const AdamParams& p) {
    double loss = 0.0;
    Gradients g = backward(batch, truth, &loss);
    adam_step(g, p);
    return loss;
  }

  /// Copy into another scalar type (used for 64-bit gradient checking).
  template <typename S2>
  Network<S2> cast() const {
    Network<S2> out(spec_, init_seed_);
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      if (!is_parametric(spec_.layers[li].kind)) continue;
      out.weights(static_cast<int>(li)) = layers_[li].W.template cast<S2>();
      out.bias(static_cast<int>(li)) = layers_[li].b.template cast<S2>();
    }
    return out;
  }

  Mat to_input(const ImagePatch& img) const {
    if (img.height() != spec_.input_h || img.width() != spec_.input_w)
      throw std::invalid_argument("input image does not match network input shape");
    Mat in(spec_.input_h * spec_.input_w, 1);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        in(y * img.width() + x, 0) = static_cast<Scalar>(img.at(x, y));
    return in;
  }

private:
  template <typename S2>
  friend class Network;

  struct Layer {
    Mat W;  // conv: (k*k*in_c, filters); dense: (in_dim, units)
    Vec b;
    Mat mW, vW;
    Vec mb, vb;
  };

  struct Tape {
    Mat out;
    Mat patches;                // conv im2col matrix
    Eigen::ArrayXXi argmax;     // maxpool winner rows
  };

  static bool is_parametric(LayerKind k) {
    return k == LayerKind::conv || k == LayerKind::dense;
  }

  void build_shapes() {
    if (spec_.input_h <= 0 || spec_.input_w <= 0)
      throw std::invalid_argument("NetworkSpec: input shape must be positive");
    shapes_.clear();
    layers_.assign(spec_.layers.size(), Layer{});
    Shape cur{spec_.input_h, spec_.input_w, 1};
    bool flat = false;
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      const LayerSpec& ls = spec_.layers[li];
      auto fail = [&](const std::string& why) {
        throw std::invalid_argument("layer " + std::to_string(li) + ": " + why);
      };
      switch (ls.kind) {
        case LayerKind::conv: {
          if (flat) fail("conv after flatten");
          if (ls.kernel <= 0 || ls.filters <= 0) fail("conv needs kernel and filters");
          if (cur.h < ls.kernel || cur.w < ls.kernel) fail("kernel larger than input");
          layers_[li].W.resize(ls.kernel * ls.kernel * cur.c, ls.filters);
          layers_[li].b.resize(ls.filters);
          cur = {cur.h - ls.kernel + 1, cur.w - ls.kernel + 1, ls.filters};
          break;
        }
        case LayerKind::maxpool: {
          if (flat) fail("maxpool after flatten");
          if (cur.h < 2 || cur.w < 2) fail("maxpool needs at least 2x2 input");
          cur = {cur.h / 2, cur.w / 2, cur.c};
          break;
        }
        case LayerKind::relu:
          break;
        case LayerKind::flatten: {
          if (flat) fail("flatten twice");
          cur = {cur.flat(), 1, 1};
          flat = true;
          break;
        }
        case LayerKind::dense: {
          if (!flat) fail("dense before flatten");
          if (ls.units <= 0) fail("dense needs units");
          layers_[li].W.resize(cur.h, ls.units);
          layers_[li].b.resize(ls.units);
          cur = {ls.units, 1, 1};
          break;
        }
      }
      shapes_.push_back(cur);
    }
    if (shapes_.empty() || shapes_.back().flat() != 2)
      throw std::invalid_argument("NetworkSpec: final layer must emit exactly 2 values");
  }

  Shape shape_before(size_t li) const {
    return li == 0 ? Shape{spec_.input_h, spec_.input_w, 1} : shapes_[li - 1];
  }

  // im2col: row per output pixel, column (c*k + ky)*k + kx.
  void im2col(const Mat& in, const Shape& s, int k, Mat& patches) const {
    const int oh = s.h - k + 1, ow = s.w - k + 1;
    patches.resize(oh * ow, k * k * s.c);
    for (int c = 0; c < s.c; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const int col = (c * k + ky) * k + kx;
          for (int oy = 0; oy < oh; ++oy) {
            const int in_row0 = (oy + ky) * s.w + kx;
            for (int ox = 0; ox < ow; ++ox)
              patches(oy * ow + ox, col) = in(in_row0 + ox, c);
          }
        }
      }
    }
  }

  Vec forward(const Mat& input, std::vector<Tape>* tape) const {
    Mat cur = input;
    Shape s{spec_.input_h, spec_.input_w, 1};
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      const LayerSpec& ls = spec_.layers[li];
      Mat next;
      switch (ls.kind) {
        case LayerKind::conv: {
          const int k = ls.kernel;
          Mat patches;
          im2col(cur, s, k, patches);
          next.noalias() = patches * layers_[li].W;
          next.rowwise() += layers_[li].b.transpose();
          if (tape) (*tape)[li].patches = std::move(patches);
          s = {s.h - k + 1, s.w - k + 1, ls.filters};
          break;
        }
        case LayerKind::maxpool: {
          const int oh = s.h / 2, ow = s.w / 2;
          next.resize(oh * ow, s.c);
          Eigen::ArrayXXi arg(oh * ow, s.c);
          for (int c = 0; c < s.c; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
              for (int ox = 0; ox < ow; ++ox) {
                int best = (2 * oy) * s.w + 2 * ox;
                Scalar bv = cur(best, c);
                const int cand[3] = {(2 * oy) * s.w + 2 * ox + 1, (2 * oy + 1) * s.w + 2 * ox,
                                     (2 * oy + 1) * s.w + 2 * ox + 1};
                for (int r : cand)
                  if (cur(r, c) > bv) { bv = cur(r, c); best = r; }
                next(oy * ow + ox, c) = bv;
                arg(oy * ow + ox, c) = best;
              }
            }
          }
          if (tape) (*tape)[li].argmax = std::move(arg);
          s = {oh, ow, s.c};
          break;
        }
        case LayerKind::relu:
          next = cur.cwiseMax(Scalar(0));
          break;
        case LayerKind::flatten:
          next = Eigen::Map<const Mat>(cur.data(), cur.size(), 1);
          s = {s.flat(), 1, 1};
          break;
        case LayerKind::dense:
          next.noalias() = layers_[li].W.transpose() * cur;
          next += layers_[li].b;
          s = {ls.units, 1, 1};
          break;
      }
      if (tape) (*tape)[li].out = next;
      cur = std::move(next);
    }
    return Eigen::Map<const Vec>(cur.data(), cur.size());
  }

  void backprop_sample(const Mat& input, const std::vector<Tape>& tape, Mat dOut,
                       Gradients& g) const {
    for (int li = static_cast<int>(spec_.layers.size()) - 1; li >= 0; --li) {
      const LayerSpec& ls = spec_.layers[li];
      const Mat& in = li == 0 ? input : tape[li - 1].out;
      const Shape sin = shape_before(li);
      Mat dIn;
      switch (ls.kind) {
        case LayerKind::conv: {
          const int k = ls.kernel;
          const Mat& patches = tape[li].patches;
          if (ls.trainable) {
            g.gW[li].noalias() += patches.transpose() * dOut;
            g.gb[li] += dOut.colwise().sum().transpose();
          }
          if (li == 0) return;  // no input gradient needed
          Mat dPatches;
          dPatches.noalias() = dOut * layers_[li].W.transpose();
          // col2im scatter-add
          dIn.setZero(sin.h * sin.w, sin.c);
          const int oh = sin.h - k + 1, ow = sin.w - k + 1;
          for (int c = 0; c < sin.c; ++c) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const int col = (c * k + ky) * k + kx;
                for (int oy = 0; oy < oh; ++oy) {
                  const int in_row0 = (oy + ky) * sin.w + kx;
                  for (int ox = 0; ox < ow; ++ox)
                    dIn(in_row0 + ox, c) += dPatches(oy * ow + ox, col);
                }
              }
            }
          }
          break;
        }
        case LayerKind::maxpool: {
          dIn.setZero(sin.h * sin.w, sin.c);
          const Eigen::ArrayXXi& arg = tape[li].argmax;
          for (int c = 0; c < dOut.cols(); ++c)
            for (int r = 0; r < dOut.rows(); ++r) dIn(arg(r, c), c) += dOut(r, c);
          break;
        }
        case LayerKind::relu:
          dIn = dOut.cwiseProduct(
              (tape[li].out.array() > Scalar(0)).template cast<Scalar>().matrix());
          break;
        case LayerKind::flatten:
          dIn = Eigen::Map<const Mat>(dOut.data(), sin.h * sin.w, sin.c);
          break;
        case LayerKind::dense: {
          if (ls.trainable) {
            g.gW[li].noalias() += in * dOut.transpose();
            g.gb[li] += dOut.col(0);
          }
          if (li == 0) return;
          dIn.noalias() = layers_[li].W * dOut;
          break;
        }
      }
      dOut = std::move(dIn);
    }
  }

  NetworkSpec spec_;
  uint64_t init_seed_ = 0;
  uint64_t adam_t_ = 0;
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
};

using NetworkF = Network<float>;
using NetworkD = Network<double>;

/// Versioned binary container ("CRCNN", version, spec text, float32 LE
/// weights and Adam state per parametric layer in declaration order).
void save_model(const NetworkF& net, const std::string& path);
NetworkF load_model(const std::string& path);

}  // namespace crloc::neural
