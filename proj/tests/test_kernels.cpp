#include <gtest/gtest.h>
#include <omp.h>

#include "kernel_cases.hpp"

using namespace bookrel;

TEST(Kernels, MatchBruteForceOracles) {
  const auto e = test::run_kernel_oracles(150, 1234);
  EXPECT_LT(e.conv_forward, 1e-9);
  EXPECT_LT(e.conv_backward, 1e-9);
  EXPECT_EQ(e.pool_forward, 0.0);
  EXPECT_EQ(e.pool_backward, 0.0);
  EXPECT_LT(e.cosine, 1e-12);
}

TEST(Kernels, ConvByHand) {
  // 1x3x3 input, one 2x2 kernel of ones, bias 1.
  const std::vector<double> input{1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<double> weight{1, 1, 1, 1};
  const std::vector<double> bias{1};
  std::vector<double> out(4);
  kernels::conv2d_forward(input, {1, 3, 3}, weight, bias, 1, 2, out);
  EXPECT_EQ(out, (std::vector<double>{13, 17, 25, 29}));
}

TEST(Kernels, PoolRoutesToFirstMax) {
  const std::vector<double> input{1, 1, 1, 1};
  std::vector<double> out(1);
  std::vector<std::uint32_t> arg(1);
  kernels::maxpool2x2_forward(input, {1, 2, 2}, out, arg);
  EXPECT_EQ(arg[0], 0u);
  std::vector<double> gi(4);
  const std::vector<double> go{2.5};
  kernels::maxpool2x2_backward(go, arg, gi);
  EXPECT_EQ(gi, (std::vector<double>{2.5, 0, 0, 0}));
}

TEST(Kernels, OddSizesDropTrailingRowAndColumn) {
  EXPECT_EQ(kernels::pool_output_shape({2, 5, 7}), (kernels::Shape3{2, 2, 3}));
  EXPECT_EQ(kernels::conv_output_shape({3, 10, 8}, 4, 3), (kernels::Shape3{4, 8, 6}));
  EXPECT_THROW(kernels::conv_output_shape({1, 2, 2}, 1, 3), std::invalid_argument);
}

TEST(Kernels, ThreadCountDoesNotChangeResults) {
  Rng rng(99);
  const kernels::Shape3 in{8, 64, 64};
  const auto input = test::random_vector(rng, in.size());
  const auto weight = test::random_vector(rng, 16 * 8 * 9);
  const auto bias = test::random_vector(rng, 16);
  const auto os = kernels::conv_output_shape(in, 16, 3);
  std::vector<double> a(os.size()), b(os.size());
  omp_set_num_threads(1);
  kernels::conv2d_forward(input, in, weight, bias, 16, 3, a);
  omp_set_num_threads(4);
  kernels::conv2d_forward(input, in, weight, bias, 16, 3, b);
  omp_set_num_threads(1);
  EXPECT_EQ(a, b);
}
