#pragma once

/// @file layers.hpp
/// @brief Forward/backward kernels for the FCN building blocks, CHW layout, batch size 1.
///
/// Every kernel is instantiated for float (training) and double (gradient checks).

#include <cstdint>
#include <random>
#include <vector>

#include "tspfcn/tensor.hpp"

namespace tspfcn::layers {

/// Thread fan-out for the convolution loops. Work is split over output (or input) channels
/// and each channel is reduced in the same order as the serial path, so results are
/// identical either way.
struct Compute {
    int threads = 1;
};

/// Stride-1 "same" convolution. weight {cout, cin, k, k} with odd k, bias {cout}.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Compute& compute = {});

/// Accumulates into grad_weight / grad_bias; returns the input gradient.
template <typename T>
Tensor<T> conv2d_backward(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& grad_out,
                          Tensor<T>& grad_weight, Tensor<T>& grad_bias, const Compute& compute = {});

/// Transposed convolution with kernel 2s, stride s and padding s/2: output is s times the input.
/// weight {cin, cout, 2s, 2s}, bias {cout}.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& in, const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride);

template <typename T>
Tensor<T> conv_transpose2d_backward(const Tensor<T>& in, const Tensor<T>& weight,
                                    const Tensor<T>& grad_out, int stride, Tensor<T>& grad_weight,
                                    Tensor<T>& grad_bias);

/// 2x2 max pooling with stride 2. `argmax` receives the flat input index of each output.
template <typename T>
Tensor<T> maxpool2(const Tensor<T>& in, std::vector<std::uint32_t>& argmax);

template <typename T>
Tensor<T> maxpool2_backward(const Shape& in_shape, const std::vector<std::uint32_t>& argmax,
                            const Tensor<T>& grad_out);

template <typename T>
void relu_inplace(Tensor<T>& t);

/// Zeroes the gradient wherever the forward output was clipped.
template <typename T>
void relu_backward_inplace(const Tensor<T>& out, Tensor<T>& grad);

/// Inverted dropout: keeps each unit with probability 1-rate and scales it by 1/(1-rate).
/// `mask` receives the applied per-unit factor.
template <typename T>
void dropout_inplace(Tensor<T>& t, double rate, std::mt19937_64& rng, std::vector<T>& mask);

template <typename T>
void sigmoid_inplace(Tensor<T>& t);

/// Channel-wise concatenation of CHW tensors with equal spatial size.
template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts);

} // namespace tspfcn::layers
