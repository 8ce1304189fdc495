#include "morphoqg/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "morphoqg/errors.hpp"

namespace morphoqg {

template <typename T>
double mean_loss(const QgModel<T>& model, std::span<const ModelInput> data) {
  double total = 0.0;
  std::size_t steps = 0;
  for (const ModelInput& in : data) {
    const auto r = model.evaluate(in);
    total += r.loss;
    steps += r.steps;
  }
  return steps ? total / static_cast<double>(steps) : 0.0;
}

template <typename T>
TrainResult train(QgModel<T>& model, std::span<const ModelInput> train_set,
                  std::span<const ModelInput> dev, const TrainOptions& opts,
                  const TrainCallback& on_step) {
  if (train_set.empty()) throw EmptyInputError("training set is empty");
  if (opts.batch_size == 0) throw DataError("batch size must be positive");

  std::mt19937_64 rng(opts.seed);
  Adam<T> adam(AdamConfig{opts.learning_rate, 0.9, 0.999, 1e-8});
  ParameterStore<T>& params = model.params();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  TrainResult result;
  ParameterStore<T> best;
  bool have_best = false;
  result.best_dev_loss = std::numeric_limits<double>::infinity();

  auto evaluate_dev = [&](std::size_t step) -> const DevRecord* {
    if (dev.empty()) return nullptr;
    const double loss = mean_loss(model, dev);
    if (!std::isfinite(loss)) throw DivergenceError("dev loss became non-finite at step " + std::to_string(step));
    result.dev.push_back({step, loss});
    if (loss < result.best_dev_loss) {
      result.best_dev_loss = loss;
      result.best_step = step;
      best = params.template cast<T>();
      have_best = true;
    }
    return &result.dev.back();
  };

  for (std::size_t step = 1; step <= opts.steps; ++step) {
    std::vector<std::size_t> batch;
    while (batch.size() < std::min(opts.batch_size, train_set.size())) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    std::size_t decoder_steps = 0;
    for (std::size_t i : batch) decoder_steps += train_set[i].target.size() + 1;
    const T scale = static_cast<T>(1.0 / static_cast<double>(decoder_steps));

    params.zero_grad();
    double total = 0.0;
    for (std::size_t i : batch) total += model.loss(train_set[i], &rng, scale).loss;
    const double mean = total / static_cast<double>(decoder_steps);
    if (!std::isfinite(mean))
      throw DivergenceError("training loss became non-finite at step " + std::to_string(step));
    const double norm = clip_grad_norm(params, opts.clip_norm);
    if (!std::isfinite(norm))
      throw DivergenceError("gradient norm became non-finite at step " + std::to_string(step));
    adam.step(params);

    result.curve.push_back({step, mean, norm});
    const bool last = step == opts.steps || mean < opts.target_loss;
    const DevRecord* dev_record = nullptr;
    if ((opts.eval_every && step % opts.eval_every == 0) || last) dev_record = evaluate_dev(step);
    if (on_step) on_step(result.curve.back(), dev_record);
    if (last) break;
  }

  if (have_best) {
    for (auto& [name, p] : params) p.value = best.value(name);
  } else {
    result.best_step = result.curve.empty() ? 0 : result.curve.back().step;
    result.best_dev_loss = 0.0;
  }
  return result;
}

template double mean_loss<float>(const QgModel<float>&, std::span<const ModelInput>);
template double mean_loss<double>(const QgModel<double>&, std::span<const ModelInput>);
template TrainResult train<float>(QgModel<float>&, std::span<const ModelInput>,
                                  std::span<const ModelInput>, const TrainOptions&,
                                  const TrainCallback&);
template TrainResult train<double>(QgModel<double>&, std::span<const ModelInput>,
                                   std::span<const ModelInput>, const TrainOptions&,
                                   const TrainCallback&);

}  // namespace morphoqg
