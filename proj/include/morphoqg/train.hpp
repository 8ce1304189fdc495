#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "morphoqg/model.hpp"

namespace morphoqg {

struct TrainOptions {
  std::size_t steps = 1000;        // optimizer updates
  std::size_t batch_size = 32;
  double learning_rate = 0.002;
  double clip_norm = 5.0;
  std::size_t eval_every = 100;    // dev evaluation period, in steps
  std::uint64_t seed = 42;
  /// Stop early once the mean training loss of a step falls below this.
  double target_loss = 0.0;
};

struct StepRecord {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean per decoder step over the batch
  double grad_norm = 0.0;   // before clipping
};

struct DevRecord {
  std::size_t step = 0;
  double dev_loss = 0.0;  // mean per decoder step over the dev set
};

struct TrainResult {
  std::vector<StepRecord> curve;
  std::vector<DevRecord> dev;
  std::size_t best_step = 0;
  double best_dev_loss = 0.0;
};

using TrainCallback = std::function<void(const StepRecord&, const DevRecord*)>;

/// Mean per-step loss over a data set, no dropout.
template <typename T>
double mean_loss(const QgModel<T>& model, std::span<const ModelInput> data);

/// Teacher-forced minibatch training with Adam and global-norm clipping.
/// Batches are drawn from a seeded shuffle, one epoch after another. When
/// `dev` is non-empty the parameters with the lowest dev loss are restored
/// at the end; otherwise the final parameters are kept. Throws
/// DivergenceError on a non-finite loss or gradient.
template <typename T>
TrainResult train(QgModel<T>& model, std::span<const ModelInput> train_set,
                  std::span<const ModelInput> dev, const TrainOptions& opts,
                  const TrainCallback& on_step = {});

}  // namespace morphoqg
