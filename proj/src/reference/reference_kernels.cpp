#include "bookrel/reference_kernels.hpp"

#include <cmath>
#include <limits>

namespace bookrel::reference {

double cosine(std::span<const double> u, std::span<const double> v) {
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    uu += u[k] * u[k];
    vv += v[k] * v[k];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return dot / (std::sqrt(uu) * std::sqrt(vv));
}

std::vector<double> pairwise_cosine(std::span<const double> left, std::size_t rows,
                                    std::span<const double> right, std::size_t cols,
                                    std::size_t dim) {
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = cosine(left.subspan(i * dim, dim), right.subspan(j * dim, dim));
    }
  }
  return out;
}

std::vector<double> conv2d_forward(std::span<const double> input, Shape3 in,
                                   std::span<const double> weight, std::span<const double> bias,
                                   std::size_t filters, std::size_t kernel) {
  const std::size_t oh = in.height - kernel + 1;
  const std::size_t ow = in.width - kernel + 1;
  std::vector<double> out(filters * oh * ow);
  for (std::size_t f = 0; f < filters; ++f) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double s = bias[f];
        for (std::size_t c = 0; c < in.channels; ++c) {
          for (std::size_t ky = 0; ky < kernel; ++ky) {
            for (std::size_t kx = 0; kx < kernel; ++kx) {
              s += weight[((f * in.channels + c) * kernel + ky) * kernel + kx] *
                   input[(c * in.height + y + ky) * in.width + x + kx];
            }
          }
        }
        out[(f * oh + y) * ow + x] = s;
      }
    }
  }
  return out;
}

ConvGradients conv2d_backward(std::span<const double> input, Shape3 in,
                              std::span<const double> weight, std::size_t filters,
                              std::size_t kernel, std::span<const double> grad_output) {
  const std::size_t oh = in.height - kernel + 1;
  const std::size_t ow = in.width - kernel + 1;
  ConvGradients g;
  g.input.assign(in.size(), 0.0);
  g.weight.assign(weight.size(), 0.0);
  g.bias.assign(filters, 0.0);
  // Each output element (f, y, x) is the sum of bias[f] and weight*input
  // products; distribute its upstream gradient to every term it touched.
  for (std::size_t f = 0; f < filters; ++f) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const double go = grad_output[(f * oh + y) * ow + x];
        g.bias[f] += go;
        for (std::size_t c = 0; c < in.channels; ++c) {
          for (std::size_t ky = 0; ky < kernel; ++ky) {
            for (std::size_t kx = 0; kx < kernel; ++kx) {
              const std::size_t wi = ((f * in.channels + c) * kernel + ky) * kernel + kx;
              const std::size_t ii = (c * in.height + y + ky) * in.width + x + kx;
              g.weight[wi] += go * input[ii];
              g.input[ii] += go * weight[wi];
            }
          }
        }
      }
    }
  }
  return g;
}

std::vector<double> maxpool2x2_forward(std::span<const double> input, Shape3 in) {
  const std::size_t oh = in.height / 2;
  const std::size_t ow = in.width / 2;
  std::vector<double> out(in.channels * oh * ow);
  for (std::size_t c = 0; c < in.channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            m = std::max(m, input[(c * in.height + 2 * y + dy) * in.width + 2 * x + dx]);
          }
        }
        out[(c * oh + y) * ow + x] = m;
      }
    }
  }
  return out;
}

std::vector<double> maxpool2x2_backward(std::span<const double> input, Shape3 in,
                                        std::span<const double> grad_output) {
  const std::size_t oh = in.height / 2;
  const std::size_t ow = in.width / 2;
  const auto pooled = maxpool2x2_forward(input, in);
  std::vector<double> g(in.size(), 0.0);
  for (std::size_t c = 0; c < in.channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const std::size_t o = (c * oh + y) * ow + x;
        bool routed = false;
        for (std::size_t dy = 0; dy < 2 && !routed; ++dy) {
          for (std::size_t dx = 0; dx < 2 && !routed; ++dx) {
            const std::size_t i = (c * in.height + 2 * y + dy) * in.width + 2 * x + dx;
            if (input[i] == pooled[o]) {
              g[i] += grad_output[o];
              routed = true;
            }
          }
        }
      }
    }
  }
  return g;
}

}  // namespace bookrel::reference
