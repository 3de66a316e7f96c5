#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Numeric kernels used by featurization and the classifier. Loops over
// independent output elements are OpenMP-parallel; each output element is
// always accumulated in the same order, so results are bit-identical for any
// thread count. Serial brute-force counterparts live in reference_kernels.hpp.

namespace bookrel::kernels {

/// Channels x height x width, row-major.
struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
};

/// out[i*cols + j] = cosine(left row i, right row j); 0 when either row is all zero.
void pairwise_cosine(std::span<const double> left, std::size_t rows, std::span<const double> right,
                     std::size_t cols, std::size_t dim, std::span<double> out);

/// Output shape of a stride-1 "valid" convolution with `filters` square kernels.
Shape3 conv_output_shape(Shape3 in, std::size_t filters, std::size_t kernel);

/// weight: filters x channels x kernel x kernel; bias: filters.
void conv2d_forward(std::span<const double> input, Shape3 in, std::span<const double> weight,
                    std::span<const double> bias, std::size_t filters, std::size_t kernel,
                    std::span<double> output);

/// Accumulates into grad_weight and grad_bias. grad_input, when non-empty,
/// is overwritten with dLoss/dInput.
void conv2d_backward(std::span<const double> input, Shape3 in, std::span<const double> weight,
                     std::size_t filters, std::size_t kernel, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weight,
                     std::span<double> grad_bias);

/// 2x2 stride-2 max pooling; odd trailing rows/columns are dropped.
Shape3 pool_output_shape(Shape3 in);

/// argmax receives the flat input index of each window's maximum (first in
/// row-major window order on ties).
void maxpool2x2_forward(std::span<const double> input, Shape3 in, std::span<double> output,
                        std::span<std::uint32_t> argmax);

/// Overwrites grad_input: each pooled gradient goes to its argmax position only.
void maxpool2x2_backward(std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                         std::span<double> grad_input);

}  // namespace bookrel::kernels
