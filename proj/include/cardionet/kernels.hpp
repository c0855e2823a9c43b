#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

// Raw numeric kernels over row-major buffers.
//
// Every output element is produced by exactly one thread with a fixed
// accumulation order, so results are bitwise identical for any OpenMP thread
// count. Backward kernels accumulate (+=) into their destination.
//
// The `reference` namespace holds straightforward serial loops with the
// textbook formulas. They are slow, never used on the training path, and exist
// so the optimized kernels have something independent to be compared against.

namespace cardionet::kernels {

struct ConvGeometry {
  std::size_t height = 0, width = 0, in_channels = 0, out_channels = 0;
  std::size_t kernel_h = 0, kernel_w = 0, stride = 1;
  std::size_t pad_top = 0, pad_left = 0;
  std::size_t out_height = 0, out_width = 0;

  /// "Same" padding: output is ceil(D / stride); stride 1 preserves D.
  static ConvGeometry same(std::size_t h, std::size_t w, std::size_t cin, std::size_t cout, std::size_t kh,
                           std::size_t kw, std::size_t stride = 1);
};

enum class PoolKind : std::uint8_t { Max, Avg };

struct PoolGeometry {
  std::size_t height = 0, width = 0, channels = 0;
  std::size_t window = 1, stride = 1;
  std::size_t out_height = 0, out_width = 0;

  static PoolGeometry make(std::size_t h, std::size_t w, std::size_t c, std::size_t window, std::size_t stride);
};

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
            std::size_t n);
/// dA += dC * B^T
template <typename T>
void matmul_grad_a(std::span<const T> dc, std::span<const T> b, std::span<T> da, std::size_t m, std::size_t k,
                   std::size_t n);
/// dB += A^T * dC
template <typename T>
void matmul_grad_b(std::span<const T> a, std::span<const T> dc, std::span<T> db, std::size_t m, std::size_t k,
                   std::size_t n);

template <typename T>
void conv2d_forward(std::span<const T> input, std::span<const T> kernel, std::span<const T> bias,
                    std::span<T> output, const ConvGeometry& g);
template <typename T>
void conv2d_backward_input(std::span<const T> dout, std::span<const T> kernel, std::span<T> dinput,
                           const ConvGeometry& g);
template <typename T>
void conv2d_backward_kernel(std::span<const T> input, std::span<const T> dout, std::span<T> dkernel,
                            const ConvGeometry& g);
template <typename T>
void conv2d_backward_bias(std::span<const T> dout, std::span<T> dbias, const ConvGeometry& g);

/// `argmax` receives, for max pooling, the flat input index each output was
/// taken from (first maximum in row-major window order). Unused for Avg.
template <typename T>
void pool2d_forward(std::span<const T> input, std::span<T> output, std::span<std::size_t> argmax, PoolKind kind,
                    const PoolGeometry& g);
template <typename T>
void pool2d_backward(std::span<const T> dout, std::span<const std::size_t> argmax, std::span<T> dinput,
                     PoolKind kind, const PoolGeometry& g);

namespace reference {

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
            std::size_t n);
template <typename T>
void conv2d_forward(std::span<const T> input, std::span<const T> kernel, std::span<const T> bias,
                    std::span<T> output, const ConvGeometry& g);
template <typename T>
void conv2d_backward_input(std::span<const T> dout, std::span<const T> kernel, std::span<T> dinput,
                           const ConvGeometry& g);
template <typename T>
void conv2d_backward_kernel(std::span<const T> input, std::span<const T> dout, std::span<T> dkernel,
                            const ConvGeometry& g);
template <typename T>
void pool2d_forward(std::span<const T> input, std::span<T> output, PoolKind kind, const PoolGeometry& g);

}  // namespace reference

/// Number of OpenMP threads kernels will use (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace cardionet::kernels
