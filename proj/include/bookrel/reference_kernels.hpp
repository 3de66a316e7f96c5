#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bookrel/kernels.hpp"

// Serial brute-force versions of the kernels, kept as test oracles and as the
// benchmark baseline. Every output element is computed directly from its
// definition with no shared intermediates.

namespace bookrel::reference {

using kernels::Shape3;

double cosine(std::span<const double> u, std::span<const double> v);

std::vector<double> pairwise_cosine(std::span<const double> left, std::size_t rows,
                                    std::span<const double> right, std::size_t cols,
                                    std::size_t dim);

std::vector<double> conv2d_forward(std::span<const double> input, Shape3 in,
                                   std::span<const double> weight, std::span<const double> bias,
                                   std::size_t filters, std::size_t kernel);

struct ConvGradients {
  std::vector<double> input;
  std::vector<double> weight;
  std::vector<double> bias;
};

ConvGradients conv2d_backward(std::span<const double> input, Shape3 in,
                              std::span<const double> weight, std::size_t filters,
                              std::size_t kernel, std::span<const double> grad_output);

std::vector<double> maxpool2x2_forward(std::span<const double> input, Shape3 in);

/// Routes each pooled gradient to the window's first maximum (row-major).
std::vector<double> maxpool2x2_backward(std::span<const double> input, Shape3 in,
                                        std::span<const double> grad_output);

}  // namespace bookrel::reference
