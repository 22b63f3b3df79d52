#pragma once

// Data-parallel kernels over instances. Each kernel has a serial reference
// (`*_serial`) and an OpenMP version (`*_parallel`); both produce bitwise
// identical results because per-instance work is independent and reductions
// run serially in instance order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tpsl/labels.hpp"
#include "tpsl/model.hpp"
#include "tpsl/rules.hpp"

namespace tpsl::kernels {

struct BatchGradient {
  double loss_sum = 0.0;
  double cross_entropy_sum = 0.0;
  double psl_sum = 0.0;
  ClassifierParams gradient_sum;
};

BatchGradient batch_loss_serial(std::span<const FeaturedTriplet> data,
                                std::span<const std::size_t> batch,
                                const ClassifierParams& params, double lambda,
                                std::span<const PslRule> rules,
                                GroundingGate gate);

BatchGradient batch_loss_parallel(std::span<const FeaturedTriplet> data,
                                  std::span<const std::size_t> batch,
                                  const ClassifierParams& params, double lambda,
                                  std::span<const PslRule> rules,
                                  GroundingGate gate);

// Flat batch layout: probs is instances x 3 x label_count row-major; labels
// is instances x 3 label indices in scheme order.
struct PslBatchResult {
  std::vector<double> distances;     // one per instance
  std::vector<double> subgradients;  // same layout as probs
};

PslBatchResult psl_loss_batch_serial(Scheme scheme,
                                     std::span<const double> probs,
                                     std::span<const std::int32_t> labels,
                                     std::span<const PslRule> rules);

PslBatchResult psl_loss_batch_parallel(Scheme scheme,
                                       std::span<const double> probs,
                                       std::span<const std::int32_t> labels,
                                       std::span<const PslRule> rules);

}  // namespace tpsl::kernels

namespace tpsl {

// Batched distance and subgradient under the default rule set of `scheme`;
// the array-in/array-out surface for external training pipelines. Throws
// std::invalid_argument on shape mismatch, out-of-range label indices, or
// probability rows not summing to 1 within 1e-6.
kernels::PslBatchResult psl_loss_batch(Scheme scheme,
                                       std::span<const double> probs,
                                       std::span<const std::int32_t> labels);

}  // namespace tpsl
