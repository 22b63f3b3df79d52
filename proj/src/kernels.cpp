#include "tpsl/kernels.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

#include <fmt/format.h>

namespace tpsl::kernels {
namespace {

BatchGradient reduce(const std::vector<LossResult>& parts,
                     const ClassifierParams& params) {
  BatchGradient out;
  out.gradient_sum = ClassifierParams::zeros(params.scheme, params.dim);
  for (const LossResult& r : parts) {
    out.loss_sum += r.loss;
    out.cross_entropy_sum += r.cross_entropy;
    out.psl_sum += r.psl;
    for (std::size_t i = 0; i < out.gradient_sum.weights.size(); ++i) {
      out.gradient_sum.weights[i] += r.gradient.weights[i];
    }
    for (std::size_t i = 0; i < out.gradient_sum.bias.size(); ++i) {
      out.gradient_sum.bias[i] += r.gradient.bias[i];
    }
  }
  return out;
}

std::size_t check_batch_shape(Scheme scheme, std::span<const double> probs,
                              std::span<const std::int32_t> labels) {
  const std::size_t width = label_count(scheme);
  if (labels.size() % 3 != 0) {
    throw std::invalid_argument(
        fmt::format("label tensor has {} entries, not a multiple of 3",
                    labels.size()));
  }
  const std::size_t n = labels.size() / 3;
  if (probs.size() != n * 3 * width) {
    throw std::invalid_argument(fmt::format(
        "probability tensor has {} entries, expected {} x 3 x {}",
        probs.size(), n, width));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= width) {
      throw std::invalid_argument(
          fmt::format("label index {} at position {} out of range", labels[i], i));
    }
  }
  for (std::size_t row = 0; row < n * 3; ++row) {
    double sum = 0.0;
    for (std::size_t k = 0; k < width; ++k) sum += probs[row * width + k];
    if (!(std::abs(sum - 1.0) <= 1e-6)) {
      throw std::invalid_argument(fmt::format(
          "probability row {} (instance {}, pair {}) sums to {}", row,
          row / 3, row % 3, sum));
    }
  }
  return n;
}

void psl_one(Scheme scheme, std::span<const double> probs,
             std::span<const std::int32_t> labels,
             std::span<const PslRule> rules, std::size_t i,
             PslBatchResult& out) {
  const std::size_t width = label_count(scheme);
  const std::size_t base = i * 3 * width;
  const ProbTriple p = {probs.subspan(base, width),
                        probs.subspan(base + width, width),
                        probs.subspan(base + 2 * width, width)};
  const LabelTriple l = {label_at(scheme, labels[i * 3]),
                         label_at(scheme, labels[i * 3 + 1]),
                         label_at(scheme, labels[i * 3 + 2])};
  const DistanceResult r = distance_subgradient(scheme, p, l, rules);
  out.distances[i] = r.distance;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < width; ++k) {
      out.subgradients[base + s * width + k] = r.subgradient[s][k];
    }
  }
}

}  // namespace

BatchGradient batch_loss_serial(std::span<const FeaturedTriplet> data,
                                std::span<const std::size_t> batch,
                                const ClassifierParams& params, double lambda,
                                std::span<const PslRule> rules,
                                GroundingGate gate) {
  std::vector<LossResult> parts(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    parts[i] = total_loss(data[batch[i]], params, lambda, rules, gate);
  }
  return reduce(parts, params);
}

BatchGradient batch_loss_parallel(std::span<const FeaturedTriplet> data,
                                  std::span<const std::size_t> batch,
                                  const ClassifierParams& params, double lambda,
                                  std::span<const PslRule> rules,
                                  GroundingGate gate) {
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  std::vector<LossResult> parts(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      parts[i] = total_loss(data[batch[i]], params, lambda, rules, gate);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reduce(parts, params);
}

PslBatchResult psl_loss_batch_serial(Scheme scheme,
                                     std::span<const double> probs,
                                     std::span<const std::int32_t> labels,
                                     std::span<const PslRule> rules) {
  const std::size_t n = check_batch_shape(scheme, probs, labels);
  PslBatchResult out;
  out.distances.assign(n, 0.0);
  out.subgradients.assign(probs.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) psl_one(scheme, probs, labels, rules, i, out);
  return out;
}

PslBatchResult psl_loss_batch_parallel(Scheme scheme,
                                       std::span<const double> probs,
                                       std::span<const std::int32_t> labels,
                                       std::span<const PslRule> rules) {
  const std::size_t n = check_batch_shape(scheme, probs, labels);
  PslBatchResult out;
  out.distances.assign(n, 0.0);
  out.subgradients.assign(probs.size(), 0.0);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    psl_one(scheme, probs, labels, rules, static_cast<std::size_t>(i), out);
  }
  return out;
}

}  // namespace tpsl::kernels

namespace tpsl {

kernels::PslBatchResult psl_loss_batch(Scheme scheme,
                                       std::span<const double> probs,
                                       std::span<const std::int32_t> labels) {
  const auto rules = default_rule_set(scheme);
  return kernels::psl_loss_batch_parallel(scheme, probs, labels, rules);
}

}  // namespace tpsl
