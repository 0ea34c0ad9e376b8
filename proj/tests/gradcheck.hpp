#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "motility/neural/layers.hpp"
#include "motility/neural/network.hpp"
#include "motility/rng.hpp"

namespace testutil {

using motility::Rng;
using motility::neural::Dims;
using motility::neural::Layer;
using motility::neural::Param;
using motility::neural::Tensor4;

inline Tensor4<double> random_tensor(Dims d, Rng& rng, double scale = 1.0) {
  Tensor4<double> t(d);
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

// ||a - n|| / (||a|| + ||n||), the norm-wise relative error.
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0, na = 0, nn = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(na) + std::sqrt(nn);
  return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

// Index subset to probe: everything for small tensors, a seeded sample otherwise.
inline std::vector<std::size_t> probe_indices(std::size_t n, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n <= limit) return idx;
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(limit);
  return idx;
}

struct GradCheckResult {
  double input_error = 0.0;
  double param_error = 0.0;
  std::size_t probes = 0;
  std::size_t skipped = 0;  // probes whose step straddled a kink
  double worst() const { return std::max(input_error, param_error); }
  double skipped_fraction() const { return probes ? static_cast<double>(skipped) / probes : 0.0; }
};

// Accumulates one probe. For a smooth loss the central differences at h and
// h/2 agree to O(h^2); a step that crosses a ReLU or max-pool switch breaks
// that agreement, and such probes are counted instead of compared.
struct ProbeSet {
  std::vector<double> analytic, numeric;
  std::size_t probes = 0, skipped = 0;

  template <typename Eval>
  void add(double a, double step, Eval&& loss_at) {
    ++probes;
    const double full = (loss_at(step) - loss_at(-step)) / (2 * step);
    const double half = (loss_at(step / 2) - loss_at(-step / 2)) / step;
    if (std::abs(full - half) > 1e-5 * (std::abs(full) + std::abs(half)) + 1e-9) {
      ++skipped;
      return;
    }
    analytic.push_back(a);
    numeric.push_back(full);
  }
};

template <typename Loss>
auto perturbed(double& slot, Loss& loss) {
  return [&slot, &loss](double delta) {
    const double orig = slot;
    slot = orig + delta;
    const double l = loss();
    slot = orig;
    return l;
  };
}

// Central differences of L = sum(forward(x) * R) against backward(R), in
// training mode, for the input and every parameter.
inline GradCheckResult check_layer(Layer<double>& layer, Tensor4<double> x, Rng& rng, double step = 1e-3,
                                   std::size_t probes = 200) {
  const Tensor4<double> y0 = layer.forward(x, true);
  const Tensor4<double> r = random_tensor(y0.dims, rng);
  auto loss = [&](const Tensor4<double>& in) {
    const auto y = layer.forward(in, true);
    double s = 0;
    for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * r.data[i];
    return s;
  };
  std::vector<Param<double>*> params;
  layer.collect_params(params);
  for (auto* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0);
  layer.forward(x, true);
  const Tensor4<double> dx = layer.backward(r);
  std::vector<std::vector<double>> analytic_params;
  for (auto* p : params) analytic_params.push_back(p->grad);

  auto current = [&]() { return loss(x); };
  GradCheckResult res;
  ProbeSet in_set, param_set;
  for (std::size_t i : probe_indices(x.data.size(), probes, rng)) {
    in_set.add(dx.data[i], step, perturbed(x.data[i], current));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k]->value;
    for (std::size_t i : probe_indices(value.size(), probes, rng)) {
      param_set.add(analytic_params[k][i], step, perturbed(value[i], current));
    }
  }
  res.input_error = relative_error(in_set.analytic, in_set.numeric);
  res.param_error = relative_error(param_set.analytic, param_set.numeric);
  res.probes = in_set.probes + param_set.probes;
  res.skipped = in_set.skipped + param_set.skipped;
  return res;
}

// Same check for a whole network: L = sum(prediction * R) with respect to
// every parameter (probed) and the tower inputs.
inline GradCheckResult check_network(motility::neural::Network<double>& net, std::vector<Tensor4<double>> inputs,
                                     Tensor4<double>* participant, Rng& rng, double step = 1e-3,
                                     std::size_t probes = 60) {
  const auto y0 = net.forward(inputs, participant, true);
  const auto r = random_tensor(y0.dims, rng);
  auto loss = [&]() {
    const auto y = net.forward(inputs, participant, true);
    double s = 0;
    for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * r.data[i];
    return s;
  };
  net.zero_grad();
  net.forward(inputs, participant, true);
  net.backward(r);
  const auto input_grads = net.input_gradients();
  auto params = net.params();
  std::vector<std::vector<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  ProbeSet in_set, param_set;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i : probe_indices(inputs[t].data.size(), probes, rng)) {
      in_set.add(input_grads[t].data[i], step, perturbed(inputs[t].data[i], loss));
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i : probe_indices(params[k]->value.size(), 8, rng)) {
      param_set.add(analytic[k][i], step, perturbed(params[k]->value[i], loss));
    }
  }
  res.input_error = relative_error(in_set.analytic, in_set.numeric);
  res.param_error = relative_error(param_set.analytic, param_set.numeric);
  res.probes = in_set.probes + param_set.probes;
  res.skipped = in_set.skipped + param_set.skipped;
  return res;
}

}  // namespace testutil
