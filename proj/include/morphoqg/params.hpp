#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "morphoqg/tensor.hpp"

namespace morphoqg {

template <typename T>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
};

/// Named model tensors with a gradient buffer each. Iteration order is the
/// lexicographic order of names, which is also the checkpoint order.
template <typename T>
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}

  Parameter<T>& add(const std::string& name, std::vector<std::size_t> dims) {
    if (params_.contains(name)) throw DuplicateKeyError("parameter '" + name + "' already exists");
    Tensor<T> value(dims);
    Tensor<T> grad(std::move(dims));
    return params_.emplace(name, Parameter<T>{std::move(value), std::move(grad)}).first->second;
  }

  /// Inserts a parameter with a given value (checkpoint loading).
  Parameter<T>& add(const std::string& name, Tensor<T> value) {
    auto& p = add(name, value.dims());
    p.value = std::move(value);
    return p;
  }

  bool contains(const std::string& name) const { return params_.contains(name); }

  Parameter<T>& get(const std::string& name) {
    const auto it = params_.find(name);
    if (it == params_.end()) throw DataError("no parameter named '" + name + "'");
    return it->second;
  }
  const Parameter<T>& get(const std::string& name) const {
    const auto it = params_.find(name);
    if (it == params_.end()) throw DataError("no parameter named '" + name + "'");
    return it->second;
  }

  Tensor<T>& value(const std::string& name) { return get(name).value; }
  const Tensor<T>& value(const std::string& name) const { return get(name).value; }
  Tensor<T>& grad(const std::string& name) { return get(name).grad; }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.zero();
  }

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  std::uint64_t init_seed() const { return init_seed_; }
  void set_init_seed(std::uint64_t s) { init_seed_ = s; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out(init_seed_);
    for (const auto& [name, p] : params_) out.add(name, p.value.template cast<U>());
    return out;
  }

 private:
  std::map<std::string, Parameter<T>> params_;
  std::uint64_t init_seed_;
};

// ----------------------------------------------------------- initialization

template <typename T, typename Rng>
void init_uniform(Tensor<T>& t, double range, Rng& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
}

/// Glorot-style uniform bound sqrt(6 / (fan_in + fan_out)) for a rows x cols matrix.
template <typename T, typename Rng>
void init_fan_uniform(Tensor<T>& t, Rng& rng) {
  const double fan_out = static_cast<double>(t.rows());
  const double fan_in = static_cast<double>(t.cols());
  init_uniform(t, std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

// ----------------------------------------------------------- optimization

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(ParameterStore<T>& store, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, p] : store)
    for (T g : p.grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& [_, p] : store)
      for (T& g : p.grad.values()) g *= scale;
  }
  return norm;
}

struct AdamConfig {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterStore<T>& store) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : store) {
      auto& [m, v] = moments_[name];
      if (m.size() != p.value.size()) {
        m.assign(p.value.size(), 0.0);
        v.assign(p.value.size(), 0.0);
      }
      auto& w = p.value.values();
      const auto& g = p.grad.values();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        const double update = cfg_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
        w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
      }
    }
  }

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments_;
};

}  // namespace morphoqg
