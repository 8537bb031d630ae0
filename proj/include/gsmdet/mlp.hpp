#pragma once

// Dense multilayer perceptron with analytic backpropagation and Adam, small
// enough to train the sub-detectors in seconds. Real-valued throughout;
// losses follow the usual framework conventions (binary cross entropy is the
// mean over output neurons, categorical cross entropy the sum over classes)
// and log arguments are clamped to [1e-12, 1-1e-12].

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gsmdet/common.hpp"
#include "gsmdet/numerics.hpp"

namespace gsmdet {

using RVector = std::vector<double>;

struct RMatrix {
  int rows = 0, cols = 0;
  std::vector<double> a;

  RMatrix() = default;
  RMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

enum class Activation : std::uint8_t { ReLU = 0, Sigmoid = 1, Softmax = 2 };
enum class Loss { BinaryCrossEntropy, CategoricalCrossEntropy };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
  }
  return "?";
}

// Index of the largest entry, ties to the lower index.
inline int argmax(const RVector& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

struct Mlp {
  std::vector<int> layer_sizes;           // input width first
  std::vector<RMatrix> weights;           // weights[l]: sizes[l+1] x sizes[l]
  std::vector<RVector> biases;            // biases[l]: sizes[l+1]
  std::vector<Activation> activations;    // one per non-input layer

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }

  // Zero-parameter network of the given shape.
  static Mlp zeros(std::vector<int> sizes, std::vector<Activation> acts) {
    if (sizes.size() < 2 || acts.size() != sizes.size() - 1)
      throw config_error("Mlp: need >= 2 layer sizes and one activation per layer");
    for (std::size_t l = 0; l + 1 < acts.size(); ++l)
      if (acts[l] == Activation::Softmax)
        throw config_error("Mlp: softmax is only valid on the final layer");
    Mlp net;
    net.layer_sizes = std::move(sizes);
    net.activations = std::move(acts);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
      net.weights.emplace_back(net.layer_sizes[l + 1], net.layer_sizes[l]);
      net.biases.emplace_back(net.layer_sizes[l + 1], 0.0);
    }
    return net;
  }

  // He-uniform fan-in init for ReLU layers, Glorot-uniform otherwise.
  static Mlp random(std::vector<int> sizes, std::vector<Activation> acts, Rng& rng) {
    Mlp net = zeros(std::move(sizes), std::move(acts));
    for (int l = 0; l < net.layer_count(); ++l) {
      const double fan_in = net.layer_sizes[l];
      const double fan_out = net.layer_sizes[l + 1];
      const double limit = net.activations[l] == Activation::ReLU
                               ? std::sqrt(6.0 / fan_in)
                               : std::sqrt(6.0 / (fan_in + fan_out));
      for (double& w : net.weights[l].a) w = (2.0 * rng.uniform() - 1.0) * limit;
    }
    return net;
  }
};

enum class CountConvention { WeightsOnly, WeightsAndBiases };

inline std::int64_t parameter_count(const Mlp& net, CountConvention convention) {
  std::int64_t n = 0;
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    n += static_cast<std::int64_t>(net.layer_sizes[l]) * net.layer_sizes[l + 1];
    if (convention == CountConvention::WeightsAndBiases) n += net.layer_sizes[l + 1];
  }
  return n;
}

namespace detail {

inline double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void softmax_into(const RVector& z, RVector& p) {
  p.resize(z.size());
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  double sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - m));
  for (double& v : p) v /= sum;
}

inline constexpr double kLogClampLo = 1e-12;
inline constexpr double kLogClampHi = 1.0 - 1e-12;

inline double clamp_prob(double p) {
  return p < kLogClampLo ? kLogClampLo : (p > kLogClampHi ? kLogClampHi : p);
}

}  // namespace detail

// Per-layer buffers for one forward/backward pass; reuse across calls to keep
// hot loops allocation-free.
struct MlpScratch {
  std::vector<RVector> z;  // pre-activations, one per non-input layer
  std::vector<RVector> a;  // activations, a[0] is the input
  std::vector<RVector> delta;
};

// Affine-then-activation chain; returns the output layer activation.
inline const RVector& forward_into(const Mlp& net, const RVector& input, MlpScratch& s) {
  if (static_cast<int>(input.size()) != net.input_size())
    throw std::invalid_argument("forward: input size " + std::to_string(input.size()) +
                                " != " + std::to_string(net.input_size()));
  const int depth = net.layer_count();
  s.z.resize(depth);
  s.a.resize(depth + 1);
  s.a[0] = input;
  for (int l = 0; l < depth; ++l) {
    const RMatrix& w = net.weights[l];
    const RVector& x = s.a[l];
    RVector& z = s.z[l];
    z.resize(w.rows);
    for (int i = 0; i < w.rows; ++i) {
      double acc = net.biases[l][i];
      const double* row = &w.a[static_cast<std::size_t>(i) * w.cols];
      for (int j = 0; j < w.cols; ++j) acc += row[j] * x[j];
      z[i] = acc;
    }
    RVector& a = s.a[l + 1];
    switch (net.activations[l]) {
      case Activation::ReLU:
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0 ? z[i] : 0.0;
        break;
      case Activation::Sigmoid:
        a.resize(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) a[i] = detail::stable_sigmoid(z[i]);
        break;
      case Activation::Softmax:
        detail::softmax_into(z, a);
        break;
    }
  }
  return s.a.back();
}

// All layer activations, input first.
inline std::vector<RVector> forward(const Mlp& net, const RVector& input) {
  MlpScratch s;
  forward_into(net, input, s);
  return s.a;
}

inline double loss_value(Loss loss, const RVector& output, const RVector& target) {
  if (output.size() != target.size())
    throw std::invalid_argument("loss: output/target size mismatch");
  double acc = 0;
  if (loss == Loss::BinaryCrossEntropy) {
    for (std::size_t i = 0; i < output.size(); ++i) {
      const double p = detail::clamp_prob(output[i]);
      acc -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
    }
    return acc / static_cast<double>(output.size());
  }
  for (std::size_t i = 0; i < output.size(); ++i)
    if (target[i] != 0.0) acc -= target[i] * std::log(detail::clamp_prob(output[i]));
  return acc;
}

struct Gradients {
  std::vector<RMatrix> w;
  std::vector<RVector> b;

  static Gradients zeros_like(const Mlp& net) {
    Gradients g;
    for (int l = 0; l < net.layer_count(); ++l) {
      g.w.emplace_back(net.weights[l].rows, net.weights[l].cols);
      g.b.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
  }

  void zero() {
    for (RMatrix& m : w) std::fill(m.a.begin(), m.a.end(), 0.0);
    for (RVector& v : b) std::fill(v.begin(), v.end(), 0.0);
  }
};

namespace detail {

// Output-layer delta dL/dz for the supported pairings. The canonical pairs
// collapse to (p - t) shapes; softmax+BCE goes through the softmax Jacobian.
inline void output_delta(Activation act, Loss loss, const RVector& p, const RVector& t,
                         RVector& delta) {
  const std::size_t n = p.size();
  delta.resize(n);
  if (act == Activation::Sigmoid && loss == Loss::BinaryCrossEntropy) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = (p[i] - t[i]) * inv_n;
    return;
  }
  if (act == Activation::Softmax && loss == Loss::CategoricalCrossEntropy) {
    for (std::size_t i = 0; i < n; ++i) delta[i] = p[i] - t[i];
    return;
  }
  if (act == Activation::Softmax && loss == Loss::BinaryCrossEntropy) {
    const double inv_n = 1.0 / static_cast<double>(n);
    RVector g(n);
    double dot = 0;
    for (std::size_t i = 0; i < n; ++i) {
      // dp/dz vanishes where the loss clamp is active
      if (p[i] < kLogClampLo || p[i] > kLogClampHi) {
        g[i] = 0;
      } else {
        g[i] = (-t[i] / p[i] + (1.0 - t[i]) / (1.0 - p[i])) * inv_n;
      }
      dot += g[i] * p[i];
    }
    for (std::size_t i = 0; i < n; ++i) delta[i] = p[i] * (g[i] - dot);
    return;
  }
  throw config_error("unsupported output activation / loss pairing: sigmoid pairs with "
                     "binary cross entropy, softmax with either cross entropy");
}

}  // namespace detail

// Backpropagation for one example; gradients are scaled by `scale` and added
// into `grads` (callers accumulate batches this way). Returns the loss.
inline double accumulate_loss_and_gradient(const Mlp& net, const RVector& input,
                                           const RVector& target, Loss loss, MlpScratch& s,
                                           Gradients& grads, double scale = 1.0) {
  const RVector& out = forward_into(net, input, s);
  const int depth = net.layer_count();
  for (int l = 0; l < depth; ++l)
    for (double v : s.a[l + 1])
      if (!std::isfinite(v))
        throw numeric_error("forward pass produced a non-finite value at layer " +
                            std::to_string(l));
  if (static_cast<int>(target.size()) != net.output_size())
    throw std::invalid_argument("loss_and_gradient: target size mismatch");
  const double value = loss_value(loss, out, target);

  s.delta.resize(depth);
  detail::output_delta(net.activations[depth - 1], loss, out, target, s.delta[depth - 1]);
  for (int l = depth - 2; l >= 0; --l) {
    const RMatrix& w = net.weights[l + 1];
    RVector& d = s.delta[l];
    const RVector& dn = s.delta[l + 1];
    d.assign(net.layer_sizes[l + 1], 0.0);
    for (int i = 0; i < w.rows; ++i) {
      const double di = dn[i];
      const double* row = &w.a[static_cast<std::size_t>(i) * w.cols];
      for (int j = 0; j < w.cols; ++j) d[j] += row[j] * di;
    }
    switch (net.activations[l]) {
      case Activation::ReLU:
        for (std::size_t j = 0; j < d.size(); ++j)
          if (s.z[l][j] <= 0) d[j] = 0;
        break;
      case Activation::Sigmoid:
        for (std::size_t j = 0; j < d.size(); ++j) {
          const double a = s.a[l + 1][j];
          d[j] *= a * (1.0 - a);
        }
        break;
      case Activation::Softmax:
        throw config_error("softmax in a hidden layer");
    }
  }
  for (int l = 0; l < depth; ++l) {
    const RVector& d = s.delta[l];
    const RVector& x = s.a[l];
    RMatrix& gw = grads.w[l];
    for (int i = 0; i < gw.rows; ++i) {
      const double di = d[i] * scale;
      double* row = &gw.a[static_cast<std::size_t>(i) * gw.cols];
      for (int j = 0; j < gw.cols; ++j) row[j] += di * x[j];
      grads.b[l][i] += di;
    }
  }
  return value;
}

inline std::pair<double, Gradients> loss_and_gradient(const Mlp& net, const RVector& input,
                                                      const RVector& target, Loss loss) {
  Gradients g = Gradients::zeros_like(net);
  MlpScratch s;
  const double v = accumulate_loss_and_gradient(net, input, target, loss, s, g);
  return {v, std::move(g)};
}

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

struct AdamState {
  std::vector<RMatrix> mw, vw;
  std::vector<RVector> mb, vb;
  std::int64_t t = 0;

  static AdamState zeros_like(const Mlp& net) {
    AdamState st;
    for (int l = 0; l < net.layer_count(); ++l) {
      st.mw.emplace_back(net.weights[l].rows, net.weights[l].cols);
      st.vw.emplace_back(net.weights[l].rows, net.weights[l].cols);
      st.mb.emplace_back(net.biases[l].size(), 0.0);
      st.vb.emplace_back(net.biases[l].size(), 0.0);
    }
    return st;
  }
};

// Standard Adam update with bias correction; one call per batch.
inline void adam_step(Mlp& net, const Gradients& grads, AdamState& state,
                      const AdamHyper& hyper) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  auto update = [&](double& param, double g, double& m, double& v) {
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g * g;
    param -= hyper.lr * (m / bc1) / (std::sqrt(v / bc2) + hyper.eps);
  };
  for (int l = 0; l < net.layer_count(); ++l) {
    for (std::size_t k = 0; k < net.weights[l].a.size(); ++k)
      update(net.weights[l].a[k], grads.w[l].a[k], state.mw[l].a[k], state.vw[l].a[k]);
    for (std::size_t k = 0; k < net.biases[l].size(); ++k)
      update(net.biases[l][k], grads.b[l][k], state.mb[l][k], state.vb[l][k]);
  }
}

struct TrainConfig {
  Loss loss = Loss::BinaryCrossEntropy;
  int epochs = 20;
  int batch_size = 32;
  AdamHyper adam;
  std::uint64_t shuffle_seed = 0;
};

// Mini-batch training; data is reshuffled each epoch from shuffle_seed, so a
// (net, seed, data) triple fully determines the result. Returns the mean loss
// per epoch.
inline std::vector<double> train(Mlp& net, const std::vector<RVector>& inputs,
                                 const std::vector<RVector>& targets, const TrainConfig& cfg) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw std::invalid_argument("train: need a nonempty input/target set of equal length");
  if (cfg.epochs < 1) throw config_error("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw config_error("train: batch size must be >= 1");
  const std::size_t n = inputs.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);

  Gradients grads = Gradients::zeros_like(net);
  AdamState state = AdamState::zeros_like(net);
  MlpScratch scratch;
  std::vector<double> history;
  history.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle.below(i + 1)]);
    double epoch_loss = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.zero();
      double batch_loss = 0;
      for (std::size_t k = start; k < end; ++k)
        batch_loss += accumulate_loss_and_gradient(net, inputs[order[k]], targets[order[k]],
                                                   cfg.loss, scratch, grads, scale);
      if (!std::isfinite(batch_loss))
        throw numeric_error("training diverged (non-finite loss) at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      epoch_loss += batch_loss;
      adam_step(net, grads, state, cfg.adam);
    }
    history.push_back(epoch_loss / static_cast<double>(n));
  }
  return history;
}

// ---------------------------------------------------------------------------
// Serialization: 8-byte magic, version byte, layer sizes, activation codes,
// then raw little-endian IEEE doubles (weights row-major, then biases, per
// layer). Round trips are bit-exact.
// ---------------------------------------------------------------------------

inline constexpr char kNetMagic[8] = {'G', 'S', 'M', 'D', 'N', 'E', 'T', '\0'};

inline void save_mlp(const Mlp& net, std::ostream& os) {
  os.write(kNetMagic, 8);
  const char version = static_cast<char>(kNetFormatVersion);
  os.write(&version, 1);
  const std::uint32_t depth = static_cast<std::uint32_t>(net.layer_sizes.size());
  os.write(reinterpret_cast<const char*>(&depth), 4);
  for (int s : net.layer_sizes) {
    const std::uint32_t v = static_cast<std::uint32_t>(s);
    os.write(reinterpret_cast<const char*>(&v), 4);
  }
  for (Activation a : net.activations) {
    const std::uint8_t v = static_cast<std::uint8_t>(a);
    os.write(reinterpret_cast<const char*>(&v), 1);
  }
  for (int l = 0; l < net.layer_count(); ++l) {
    os.write(reinterpret_cast<const char*>(net.weights[l].a.data()),
             static_cast<std::streamsize>(net.weights[l].a.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(net.biases[l].data()),
             static_cast<std::streamsize>(net.biases[l].size() * sizeof(double)));
  }
  if (!os) throw config_error("save_mlp: write failed");
}

inline void save_mlp(const Mlp& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("save_mlp: cannot open " + path);
  save_mlp(net, os);
}

inline Mlp load_mlp(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kNetMagic, 8) != 0)
    throw config_error("load_mlp: bad magic header");
  char version = 0;
  is.read(&version, 1);
  if (version != kNetFormatVersion)
    throw config_error("load_mlp: unsupported format version " + std::to_string(version));
  std::uint32_t depth = 0;
  is.read(reinterpret_cast<char*>(&depth), 4);
  if (!is || depth < 2 || depth > 1024) throw config_error("load_mlp: corrupt layer count");
  std::vector<int> sizes(depth);
  for (std::uint32_t i = 0; i < depth; ++i) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is || v == 0 || v > (1u << 20)) throw config_error("load_mlp: corrupt layer size");
    sizes[i] = static_cast<int>(v);
  }
  std::vector<Activation> acts(depth - 1);
  for (auto& a : acts) {
    std::uint8_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 1);
    if (!is || v > 2) throw config_error("load_mlp: corrupt activation code");
    a = static_cast<Activation>(v);
  }
  Mlp net = Mlp::zeros(std::move(sizes), std::move(acts));
  for (int l = 0; l < net.layer_count(); ++l) {
    is.read(reinterpret_cast<char*>(net.weights[l].a.data()),
            static_cast<std::streamsize>(net.weights[l].a.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(net.biases[l].data()),
            static_cast<std::streamsize>(net.biases[l].size() * sizeof(double)));
  }
  if (!is) throw config_error("load_mlp: truncated parameter data");
  return net;
}

inline Mlp load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw config_error("load_mlp: cannot open " + path);
  return load_mlp(is);
}

}  // namespace gsmdet
