#pragma once

#include <span>
#include <vector>

#include "dirclip/nn.hpp"

namespace dirclip::detail {

/// Activations of one example, kept for the backward pass.
/// pre[l] is the affine output of layer l; post[l] the input to layer l
/// (post[0] is the example itself).
struct ForwardCache {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

void forward_cached(const std::vector<LayerSlice>& layout, std::span<const double> params,
                    std::span<const double> input, ForwardCache& cache);

/// Accumulates d(objective)/d(params) into `grad` given d(objective)/d(logits).
void backward(const std::vector<LayerSlice>& layout, std::span<const double> params,
              const ForwardCache& cache, std::span<const double> dlogits, std::span<double> grad);

}  // namespace dirclip::detail
