#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/log.hpp"
#include "core/regress.hpp"
#include "core/rng.hpp"

namespace mc {

void MlpModel::validate() const {
  require(layer_sizes.size() >= 2, ErrorKind::Validation, "MLP needs input and output layers");
  require(layer_sizes.front() == static_cast<int>(kFeatureDim), ErrorKind::Validation,
          "MLP input layer must have " + std::to_string(kFeatureDim) + " units");
  require(layer_sizes.back() == 1, ErrorKind::Validation, "MLP output layer must have 1 unit");
  const std::size_t layers = layer_sizes.size() - 1;
  require(weights.size() == layers && biases.size() == layers, ErrorKind::Validation,
          "MLP parameter blocks do not match layer count");
  for (std::size_t l = 0; l < layers; ++l) {
    require(layer_sizes[l] >= 1 && layer_sizes[l + 1] >= 1, ErrorKind::Validation,
            "MLP layer sizes must be >= 1");
    require(weights[l].size() == static_cast<std::size_t>(layer_sizes[l + 1] * layer_sizes[l]),
            ErrorKind::Validation, "MLP weight matrix " + std::to_string(l) + " has wrong size");
    require(biases[l].size() == static_cast<std::size_t>(layer_sizes[l + 1]), ErrorKind::Validation,
            "MLP bias vector " + std::to_string(l) + " has wrong size");
    for (double v : weights[l]) require(std::isfinite(v), ErrorKind::Validation, "non-finite MLP weight");
    for (double v : biases[l]) require(std::isfinite(v), ErrorKind::Validation, "non-finite MLP bias");
  }
  require(std::isfinite(target_mean) && std::isfinite(target_scale) && target_scale > 0.0,
          ErrorKind::Validation, "MLP target scaling must be finite with positive scale");
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].begin(), weights[l].end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void MlpModel::set_parameters(const std::vector<double>& flat) {
  require(flat.size() == parameter_count(), ErrorKind::InvalidArgument,
          "parameter vector has the wrong length");
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (auto& v : weights[l]) v = flat[k++];
    for (auto& v : biases[l]) v = flat[k++];
  }
}

namespace {

// Activations per layer for one input; acts[0] is the input.
void forward_all(const MlpModel& m, const FeatureRow& z, std::vector<std::vector<double>>& acts) {
  const std::size_t layers = m.weights.size();
  acts.resize(layers + 1);
  acts[0].assign(z.begin(), z.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(m.layer_sizes[l]);
    const auto out = static_cast<std::size_t>(m.layer_sizes[l + 1]);
    auto& a = acts[l + 1];
    a.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double s = m.biases[l][o];
      const double* w = &m.weights[l][o * in];
      for (std::size_t i = 0; i < in; ++i) s += w[i] * acts[l][i];
      a[o] = (l + 1 < layers) ? std::tanh(s) : s;
    }
  }
}

}  // namespace

double MlpModel::forward_std(const FeatureRow& z) const {
  std::vector<std::vector<double>> acts;
  forward_all(*this, z, acts);
  return acts.back()[0];
}

MlpModel init_mlp(const std::vector<int>& hidden_sizes, std::uint64_t seed) {
  MlpModel m;
  m.seed = seed;
  m.layer_sizes.push_back(static_cast<int>(kFeatureDim));
  for (int h : hidden_sizes) {
    require(h >= 1, ErrorKind::InvalidArgument, "hidden layer sizes must be >= 1");
    m.layer_sizes.push_back(h);
  }
  m.layer_sizes.push_back(1);
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const auto in = static_cast<std::size_t>(m.layer_sizes[l]);
    const auto out = static_cast<std::size_t>(m.layer_sizes[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(out, 0.0);
  }
  return m;
}

double mlp_loss_and_gradient(const MlpModel& m, const std::vector<FeatureRow>& z,
                             const std::vector<double>& t, std::vector<double>* gradient) {
  require(z.size() == t.size() && !z.empty(), ErrorKind::InvalidArgument,
          "MLP loss needs matching, non-empty inputs and targets");
  const std::size_t layers = m.weights.size();
  const auto n = static_cast<double>(z.size());

  std::vector<std::vector<double>> gw, gb;
  if (gradient) {
    for (std::size_t l = 0; l < layers; ++l) {
      gw.emplace_back(m.weights[l].size(), 0.0);
      gb.emplace_back(m.biases[l].size(), 0.0);
    }
  }
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev_delta;
  double loss = 0.0;
  for (std::size_t s = 0; s < z.size(); ++s) {
    forward_all(m, z[s], acts);
    const double err = acts.back()[0] - t[s];
    loss += err * err / n;
    if (!gradient) continue;
    // d(loss)/d(output pre-activation) for this sample.
    delta.assign(1, 2.0 * err / n);
    for (std::size_t l = layers; l-- > 0;) {
      const auto in = static_cast<std::size_t>(m.layer_sizes[l]);
      const auto out = static_cast<std::size_t>(m.layer_sizes[l + 1]);
      for (std::size_t o = 0; o < out; ++o) {
        gb[l][o] += delta[o];
        double* g = &gw[l][o * in];
        for (std::size_t i = 0; i < in; ++i) g[i] += delta[o] * acts[l][i];
      }
      if (l == 0) break;
      prev_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = &m.weights[l][o * in];
        for (std::size_t i = 0; i < in; ++i) prev_delta[i] += w[i] * delta[o];
      }
      // Hidden activations are tanh: derivative 1 - a^2.
      for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= 1.0 - acts[l][i] * acts[l][i];
      delta.swap(prev_delta);
    }
  }
  if (gradient) {
    gradient->clear();
    gradient->reserve(m.parameter_count());
    for (std::size_t l = 0; l < layers; ++l) {
      gradient->insert(gradient->end(), gw[l].begin(), gw[l].end());
      gradient->insert(gradient->end(), gb[l].begin(), gb[l].end());
    }
  }
  return loss;
}

std::pair<MlpModel, Standardizer> fit_mlp(const TrainingSet& train, const MlpOptions& opt,
                                          MlpTrace* trace) {
  const Design d = design_from(train);
  require(d.x.size() >= 2, ErrorKind::InsufficientData,
          "MLP needs at least 2 samples, got " + std::to_string(d.x.size()));
  require(opt.epochs >= 0, ErrorKind::InvalidArgument, "epochs must be >= 0");
  require(opt.learning_rate > 0.0 && std::isfinite(opt.learning_rate), ErrorKind::InvalidArgument,
          "learning rate must be > 0");
  const Standardizer s = fit_standardizer(d.x);
  std::vector<FeatureRow> z;
  z.reserve(d.x.size());
  for (const auto& row : d.x) z.push_back(s.apply(row));

  MlpModel m = init_mlp(opt.hidden_sizes, opt.seed);
  const auto n = static_cast<double>(d.y.size());
  double mean = 0.0;
  for (double v : d.y) mean += v / n;
  double var = 0.0;
  for (double v : d.y) var += (v - mean) * (v - mean) / n;
  m.target_mean = mean;
  m.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  std::vector<double> t;
  t.reserve(d.y.size());
  for (double v : d.y) t.push_back((v - m.target_mean) / m.target_scale);

  std::vector<double> grad;
  std::vector<double> params = m.parameters();
  double loss = mlp_loss_and_gradient(m, z, t, &grad);
  if (trace) {
    trace->loss.assign(1, loss);
    trace->halvings = 0;
  }
  double rate = opt.learning_rate;
  int halvings = 0;
  MlpModel candidate = m;
  std::vector<double> next(params.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    bool accepted = false;
    while (!accepted) {
      for (std::size_t k = 0; k < params.size(); ++k) next[k] = params[k] - rate * grad[k];
      candidate.set_parameters(next);
      const double trial = mlp_loss_and_gradient(candidate, z, t, nullptr);
      if (std::isfinite(trial) && trial <= loss) {
        accepted = true;
        break;
      }
      if (halvings >= opt.max_halvings) break;
      rate *= 0.5;
      ++halvings;
    }
    if (!accepted) {
      log::debug("MLP training stopped after ", epoch, " epochs: backoff exhausted");
      break;
    }
    params.swap(next);
    m.set_parameters(params);
    loss = mlp_loss_and_gradient(m, z, t, &grad);
    if (trace) trace->loss.push_back(loss);
  }
  if (trace) trace->halvings = halvings;
  return {std::move(m), s};
}

}  // namespace mc
