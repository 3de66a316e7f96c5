#include "bookrel/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bookrel::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void pairwise_cosine(std::span<const double> left, std::size_t rows, std::span<const double> right,
                     std::size_t cols, std::size_t dim, std::span<double> out) {
  require(left.size() == rows * dim && right.size() == cols * dim, "pairwise_cosine: input size");
  require(out.size() == rows * cols, "pairwise_cosine: output size");

  std::vector<double> right_norm(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) s += right[j * dim + k] * right[j * dim + k];
    right_norm[j] = std::sqrt(s);
  }

  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols * dim > kParallelWork)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* u = left.data() + i * dim;
    double su = 0.0;
    for (std::size_t k = 0; k < dim; ++k) su += u[k] * u[k];
    const double nu = std::sqrt(su);
    for (std::size_t j = 0; j < cols; ++j) {
      const double denom = nu * right_norm[j];
      if (denom == 0.0) {
        out[i * cols + j] = 0.0;
        continue;
      }
      const double* v = right.data() + j * dim;
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += u[k] * v[k];
      out[i * cols + j] = dot / denom;
    }
  }
}

Shape3 conv_output_shape(Shape3 in, std::size_t filters, std::size_t kernel) {
  require(kernel >= 1 && in.height >= kernel && in.width >= kernel, "conv: kernel larger than input");
  return {filters, in.height - kernel + 1, in.width - kernel + 1};
}

void conv2d_forward(std::span<const double> input, Shape3 in, std::span<const double> weight,
                    std::span<const double> bias, std::size_t filters, std::size_t kernel,
                    std::span<double> output) {
  const auto out = conv_output_shape(in, filters, kernel);
  require(input.size() == in.size(), "conv2d_forward: input size");
  require(weight.size() == filters * in.channels * kernel * kernel, "conv2d_forward: weight size");
  require(bias.size() == filters, "conv2d_forward: bias size");
  require(output.size() == out.size(), "conv2d_forward: output size");

  const std::size_t plane = out.height * out.width;
  const auto nf = static_cast<std::ptrdiff_t>(filters);
#pragma omp parallel for schedule(static) if (out.size() * in.channels * kernel * kernel > kParallelWork)
  for (std::ptrdiff_t ff = 0; ff < nf; ++ff) {
    const auto f = static_cast<std::size_t>(ff);
    double* o = output.data() + f * plane;
    std::fill(o, o + plane, bias[f]);
    for (std::size_t c = 0; c < in.channels; ++c) {
      const double* src = input.data() + c * in.height * in.width;
      const double* w = weight.data() + (f * in.channels + c) * kernel * kernel;
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const double wv = w[ky * kernel + kx];
          for (std::size_t y = 0; y < out.height; ++y) {
            const double* row = src + (y + ky) * in.width + kx;
            double* orow = o + y * out.width;
            for (std::size_t x = 0; x < out.width; ++x) orow[x] += wv * row[x];
          }
        }
      }
    }
  }
}

void conv2d_backward(std::span<const double> input, Shape3 in, std::span<const double> weight,
                     std::size_t filters, std::size_t kernel, std::span<const double> grad_output,
                     std::span<double> grad_input, std::span<double> grad_weight,
                     std::span<double> grad_bias) {
  const auto out = conv_output_shape(in, filters, kernel);
  require(input.size() == in.size() && grad_output.size() == out.size(), "conv2d_backward: sizes");
  require(grad_weight.size() == weight.size() && grad_bias.size() == filters,
          "conv2d_backward: gradient sizes");
  require(grad_input.empty() || grad_input.size() == in.size(), "conv2d_backward: grad_input size");

  const std::size_t plane = out.height * out.width;
  const std::size_t in_plane = in.height * in.width;
  const std::size_t kk = kernel * kernel;
  const bool parallel = out.size() * in.channels * kk > kParallelWork;

  const auto nf = static_cast<std::ptrdiff_t>(filters);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ff = 0; ff < nf; ++ff) {
    const auto f = static_cast<std::size_t>(ff);
    const double* g = grad_output.data() + f * plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) bsum += g[i];
    grad_bias[f] += bsum;
    for (std::size_t c = 0; c < in.channels; ++c) {
      const double* src = input.data() + c * in_plane;
      double* gw = grad_weight.data() + (f * in.channels + c) * kk;
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          double s = 0.0;
          for (std::size_t y = 0; y < out.height; ++y) {
            const double* row = src + (y + ky) * in.width + kx;
            const double* grow = g + y * out.width;
            for (std::size_t x = 0; x < out.width; ++x) s += grow[x] * row[x];
          }
          gw[ky * kernel + kx] += s;
        }
      }
    }
  }

  if (grad_input.empty()) return;
  const auto nc = static_cast<std::ptrdiff_t>(in.channels);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t cc = 0; cc < nc; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double* gi = grad_input.data() + c * in_plane;
    std::fill(gi, gi + in_plane, 0.0);
    for (std::size_t f = 0; f < filters; ++f) {
      const double* g = grad_output.data() + f * plane;
      const double* w = weight.data() + (f * in.channels + c) * kk;
      for (std::size_t ky = 0; ky < kernel; ++ky) {
        for (std::size_t kx = 0; kx < kernel; ++kx) {
          const double wv = w[ky * kernel + kx];
          for (std::size_t y = 0; y < out.height; ++y) {
            double* row = gi + (y + ky) * in.width + kx;
            const double* grow = g + y * out.width;
            for (std::size_t x = 0; x < out.width; ++x) row[x] += wv * grow[x];
          }
        }
      }
    }
  }
}

Shape3 pool_output_shape(Shape3 in) {
  require(in.height >= 2 && in.width >= 2, "maxpool: input smaller than 2x2");
  return {in.channels, in.height / 2, in.width / 2};
}

void maxpool2x2_forward(std::span<const double> input, Shape3 in, std::span<double> output,
                        std::span<std::uint32_t> argmax) {
  const auto out = pool_output_shape(in);
  require(input.size() == in.size() && output.size() == out.size() && argmax.size() == out.size(),
          "maxpool2x2_forward: sizes");
  const auto nc = static_cast<std::ptrdiff_t>(in.channels);
#pragma omp parallel for schedule(static) if (in.size() > kParallelWork)
  for (std::ptrdiff_t cc = 0; cc < nc; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    for (std::size_t y = 0; y < out.height; ++y) {
      for (std::size_t x = 0; x < out.width; ++x) {
        std::size_t best = (c * in.height + 2 * y) * in.width + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * in.height + 2 * y + dy) * in.width + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        const std::size_t o = (c * out.height + y) * out.width + x;
        output[o] = input[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool2x2_backward(std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                         std::span<double> grad_input) {
  require(grad_output.size() == argmax.size(), "maxpool2x2_backward: sizes");
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  // Windows do not overlap, so each input position receives at most one term.
  for (std::size_t i = 0; i < grad_output.size(); ++i) grad_input[argmax[i]] += grad_output[i];
}

}  // namespace bookrel::kernels
