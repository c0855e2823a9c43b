#include "cardionet/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cardionet/errors.hpp"

namespace cardionet::kernels {

using idx = std::ptrdiff_t;

ConvGeometry ConvGeometry::same(std::size_t h, std::size_t w, std::size_t cin, std::size_t cout, std::size_t kh,
                                std::size_t kw, std::size_t stride) {
  if (kh % 2 == 0 || kw % 2 == 0)
    throw UnsupportedKernelError("conv2d_same supports odd kernel sizes only, got " + std::to_string(kh) + "x" +
                                 std::to_string(kw));
  if (stride == 0) throw DimensionError("conv2d stride must be >= 1");
  ConvGeometry g;
  g.height = h;
  g.width = w;
  g.in_channels = cin;
  g.out_channels = cout;
  g.kernel_h = kh;
  g.kernel_w = kw;
  g.stride = stride;
  g.out_height = (h + stride - 1) / stride;
  g.out_width = (w + stride - 1) / stride;
  const auto pad_total = [&](std::size_t in, std::size_t out, std::size_t k) -> std::size_t {
    const std::size_t need = (out - 1) * stride + k;
    return need > in ? need - in : 0;
  };
  g.pad_top = pad_total(h, g.out_height, kh) / 2;
  g.pad_left = pad_total(w, g.out_width, kw) / 2;
  return g;
}

PoolGeometry PoolGeometry::make(std::size_t h, std::size_t w, std::size_t c, std::size_t window,
                                std::size_t stride) {
  if (window < 1 || stride < 1) throw DimensionError("pool window and stride must be >= 1");
  if (window > h || window > w)
    throw DimensionError("pool window " + std::to_string(window) + " larger than input " + std::to_string(h) + "x" +
                         std::to_string(w));
  PoolGeometry g;
  g.height = h;
  g.width = w;
  g.channels = c;
  g.window = window;
  g.stride = stride;
  g.out_height = (h - window) / stride + 1;
  g.out_width = (w - window) / stride + 1;
  return g;
}

// ---------------------------------------------------------------------------
// matmul

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
            std::size_t n) {
  const T* A = a.data();
  const T* B = b.data();
  T* C = c.data();
#pragma omp parallel for schedule(static) if (m * k * n > 65536)
  for (idx i = 0; i < static_cast<idx>(m); ++i) {
    T* crow = C + i * n;
    std::fill(crow, crow + n, T(0));
    for (std::size_t t = 0; t < k; ++t) {
      const T av = A[i * k + t];
      const T* brow = B + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void matmul_grad_a(std::span<const T> dc, std::span<const T> b, std::span<T> da, std::size_t m, std::size_t k,
                   std::size_t n) {
  const T* dC = dc.data();
  const T* B = b.data();
  T* dA = da.data();
#pragma omp parallel for schedule(static) if (m * k * n > 65536)
  for (idx it = 0; it < static_cast<idx>(m * k); ++it) {
    const std::size_t i = it / k, t = it % k;
    const T* dcrow = dC + i * n;
    const T* brow = B + t * n;
    T s = T(0);
    for (std::size_t j = 0; j < n; ++j) s += dcrow[j] * brow[j];
    dA[it] += s;
  }
}

template <typename T>
void matmul_grad_b(std::span<const T> a, std::span<const T> dc, std::span<T> db, std::size_t m, std::size_t k,
                   std::size_t n) {
  const T* A = a.data();
  const T* dC = dc.data();
  T* dB = db.data();
#pragma omp parallel for schedule(static) if (m * k * n > 65536)
  for (idx t = 0; t < static_cast<idx>(k); ++t) {
    T* dbrow = dB + t * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = A[i * k + t];
      if (av == T(0)) continue;
      const T* dcrow = dC + i * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

// ---------------------------------------------------------------------------
// conv2d, HWC input, [kh][kw][cin][cout] kernel

template <typename T>
void conv2d_forward(std::span<const T> input, std::span<const T> kernel, std::span<const T> bias,
                    std::span<T> output, const ConvGeometry& g) {
  const T* in = input.data();
  const T* K = kernel.data();
  const T* bs = bias.data();
  T* out = output.data();
  const std::size_t Cin = g.in_channels, Cout = g.out_channels;
#pragma omp parallel for schedule(static)
  for (idx yo = 0; yo < static_cast<idx>(g.out_height); ++yo) {
    for (std::size_t xo = 0; xo < g.out_width; ++xo) {
      T* o = out + (yo * g.out_width + xo) * Cout;
      std::copy(bs, bs + Cout, o);
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const idx yi = yo * static_cast<idx>(g.stride) + static_cast<idx>(ky) - static_cast<idx>(g.pad_top);
        if (yi < 0 || yi >= static_cast<idx>(g.height)) continue;
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const idx xi = static_cast<idx>(xo * g.stride + kx) - static_cast<idx>(g.pad_left);
          if (xi < 0 || xi >= static_cast<idx>(g.width)) continue;
          const T* ip = in + (yi * static_cast<idx>(g.width) + xi) * static_cast<idx>(Cin);
          const T* kp = K + (ky * g.kernel_w + kx) * Cin * Cout;
          for (std::size_t ci = 0; ci < Cin; ++ci) {
            const T v = ip[ci];
            const T* kc = kp + ci * Cout;
            for (std::size_t co = 0; co < Cout; ++co) o[co] += v * kc[co];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(std::span<const T> dout, std::span<const T> kernel, std::span<T> dinput,
                           const ConvGeometry& g) {
  const std::size_t Cin = g.in_channels, Cout = g.out_channels;
  const std::size_t taps = g.kernel_h * g.kernel_w;
  // Transposed kernel [kh][kw][cout][cin] so the inner loop runs over cin.
  std::vector<T> kt(kernel.size());
  for (std::size_t p = 0; p < taps; ++p)
    for (std::size_t ci = 0; ci < Cin; ++ci)
      for (std::size_t co = 0; co < Cout; ++co)
        kt[(p * Cout + co) * Cin + ci] = kernel[(p * Cin + ci) * Cout + co];
  const T* dO = dout.data();
  T* dI = dinput.data();
  const idx S = static_cast<idx>(g.stride);
#pragma omp parallel for schedule(static)
  for (idx yi = 0; yi < static_cast<idx>(g.height); ++yi) {
    for (idx xi = 0; xi < static_cast<idx>(g.width); ++xi) {
      T* d = dI + (yi * static_cast<idx>(g.width) + xi) * static_cast<idx>(Cin);
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        const idx ny = yi + static_cast<idx>(g.pad_top) - static_cast<idx>(ky);
        if (ny < 0 || ny % S != 0) continue;
        const idx yo = ny / S;
        if (yo >= static_cast<idx>(g.out_height)) continue;
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const idx nx = xi + static_cast<idx>(g.pad_left) - static_cast<idx>(kx);
          if (nx < 0 || nx % S != 0) continue;
          const idx xo = nx / S;
          if (xo >= static_cast<idx>(g.out_width)) continue;
          const T* go = dO + (yo * static_cast<idx>(g.out_width) + xo) * static_cast<idx>(Cout);
          const T* kp = kt.data() + (ky * g.kernel_w + kx) * Cout * Cin;
          for (std::size_t co = 0; co < Cout; ++co) {
            const T gv = go[co];
            const T* kc = kp + co * Cin;
            for (std::size_t ci = 0; ci < Cin; ++ci) d[ci] += gv * kc[ci];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_kernel(std::span<const T> input, std::span<const T> dout, std::span<T> dkernel,
                            const ConvGeometry& g) {
  const std::size_t Cin = g.in_channels, Cout = g.out_channels;
  const T* in = input.data();
  const T* dO = dout.data();
  T* dK = dkernel.data();
  const idx units = static_cast<idx>(g.kernel_h * g.kernel_w * Cin);
#pragma omp parallel for schedule(static)
  for (idx u = 0; u < units; ++u) {
    const std::size_t ci = static_cast<std::size_t>(u) % Cin;
    const std::size_t tap = static_cast<std::size_t>(u) / Cin;
    const std::size_t ky = tap / g.kernel_w, kx = tap % g.kernel_w;
    T* dk = dK + u * static_cast<idx>(Cout);
    for (std::size_t yo = 0; yo < g.out_height; ++yo) {
      const idx yi = static_cast<idx>(yo * g.stride + ky) - static_cast<idx>(g.pad_top);
      if (yi < 0 || yi >= static_cast<idx>(g.height)) continue;
      for (std::size_t xo = 0; xo < g.out_width; ++xo) {
        const idx xi = static_cast<idx>(xo * g.stride + kx) - static_cast<idx>(g.pad_left);
        if (xi < 0 || xi >= static_cast<idx>(g.width)) continue;
        const T v = in[(yi * static_cast<idx>(g.width) + xi) * static_cast<idx>(Cin) + static_cast<idx>(ci)];
        const T* go = dO + (yo * g.out_width + xo) * Cout;
        for (std::size_t co = 0; co < Cout; ++co) dk[co] += v * go[co];
      }
    }
  }
}

template <typename T>
void conv2d_backward_bias(std::span<const T> dout, std::span<T> dbias, const ConvGeometry& g) {
  const std::size_t Cout = g.out_channels;
  const std::size_t positions = g.out_height * g.out_width;
  for (std::size_t p = 0; p < positions; ++p)
    for (std::size_t co = 0; co < Cout; ++co) dbias[co] += dout[p * Cout + co];
}

// ---------------------------------------------------------------------------
// pooling, HWC

template <typename T>
void pool2d_forward(std::span<const T> input, std::span<T> output, std::span<std::size_t> argmax, PoolKind kind,
                    const PoolGeometry& g) {
  const std::size_t C = g.channels;
  const T n = static_cast<T>(g.window * g.window);
#pragma omp parallel for schedule(static)
  for (idx yo = 0; yo < static_cast<idx>(g.out_height); ++yo) {
    for (std::size_t xo = 0; xo < g.out_width; ++xo) {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t o = (yo * g.out_width + xo) * C + c;
        if (kind == PoolKind::Max) {
          std::size_t best = ((yo * g.stride) * g.width + xo * g.stride) * C + c;
          T bv = input[best];
          for (std::size_t wy = 0; wy < g.window; ++wy)
            for (std::size_t wx = 0; wx < g.window; ++wx) {
              const std::size_t i = ((yo * g.stride + wy) * g.width + xo * g.stride + wx) * C + c;
              if (input[i] > bv) {
                bv = input[i];
                best = i;
              }
            }
          output[o] = bv;
          argmax[o] = best;
        } else {
          T s = T(0);
          for (std::size_t wy = 0; wy < g.window; ++wy)
            for (std::size_t wx = 0; wx < g.window; ++wx)
              s += input[((yo * g.stride + wy) * g.width + xo * g.stride + wx) * C + c];
          output[o] = s / n;
        }
      }
    }
  }
}

template <typename T>
void pool2d_backward(std::span<const T> dout, std::span<const std::size_t> argmax, std::span<T> dinput,
                     PoolKind kind, const PoolGeometry& g) {
  const std::size_t C = g.channels;
  const T n = static_cast<T>(g.window * g.window);
  // Windows may overlap when stride < window, so this stays serial.
  for (std::size_t yo = 0; yo < g.out_height; ++yo)
    for (std::size_t xo = 0; xo < g.out_width; ++xo)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t o = (yo * g.out_width + xo) * C + c;
        if (kind == PoolKind::Max) {
          dinput[argmax[o]] += dout[o];
        } else {
          const T gv = dout[o] / n;
          for (std::size_t wy = 0; wy < g.window; ++wy)
            for (std::size_t wx = 0; wx < g.window; ++wx)
              dinput[((yo * g.stride + wy) * g.width + xo * g.stride + wx) * C + c] += gv;
        }
      }
}

// ---------------------------------------------------------------------------
// reference

namespace reference {

template <typename T>
void matmul(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m, std::size_t k,
            std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T s = T(0);
      for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
      c[i * n + j] = s;
    }
}

template <typename T>
void conv2d_forward(std::span<const T> input, std::span<const T> kernel, std::span<const T> bias,
                    std::span<T> output, const ConvGeometry& g) {
  for (std::size_t yo = 0; yo < g.out_height; ++yo)
    for (std::size_t xo = 0; xo < g.out_width; ++xo)
      for (std::size_t co = 0; co < g.out_channels; ++co) {
        T s = bias[co];
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx)
            for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
              const long yi = static_cast<long>(yo * g.stride + ky) - static_cast<long>(g.pad_top);
              const long xi = static_cast<long>(xo * g.stride + kx) - static_cast<long>(g.pad_left);
              if (yi < 0 || xi < 0 || yi >= static_cast<long>(g.height) || xi >= static_cast<long>(g.width))
                continue;
              s += input[(yi * g.width + xi) * g.in_channels + ci] *
                   kernel[((ky * g.kernel_w + kx) * g.in_channels + ci) * g.out_channels + co];
            }
        output[(yo * g.out_width + xo) * g.out_channels + co] = s;
      }
}

template <typename T>
void conv2d_backward_input(std::span<const T> dout, std::span<const T> kernel, std::span<T> dinput,
                           const ConvGeometry& g) {
  // Scatter form: each output gradient is pushed back to every input it read.
  for (std::size_t yo = 0; yo < g.out_height; ++yo)
    for (std::size_t xo = 0; xo < g.out_width; ++xo)
      for (std::size_t co = 0; co < g.out_channels; ++co)
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx)
            for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
              const long yi = static_cast<long>(yo * g.stride + ky) - static_cast<long>(g.pad_top);
              const long xi = static_cast<long>(xo * g.stride + kx) - static_cast<long>(g.pad_left);
              if (yi < 0 || xi < 0 || yi >= static_cast<long>(g.height) || xi >= static_cast<long>(g.width))
                continue;
              dinput[(yi * g.width + xi) * g.in_channels + ci] +=
                  dout[(yo * g.out_width + xo) * g.out_channels + co] *
                  kernel[((ky * g.kernel_w + kx) * g.in_channels + ci) * g.out_channels + co];
            }
}

template <typename T>
void conv2d_backward_kernel(std::span<const T> input, std::span<const T> dout, std::span<T> dkernel,
                            const ConvGeometry& g) {
  for (std::size_t yo = 0; yo < g.out_height; ++yo)
    for (std::size_t xo = 0; xo < g.out_width; ++xo)
      for (std::size_t co = 0; co < g.out_channels; ++co)
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx)
            for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
              const long yi = static_cast<long>(yo * g.stride + ky) - static_cast<long>(g.pad_top);
              const long xi = static_cast<long>(xo * g.stride + kx) - static_cast<long>(g.pad_left);
              if (yi < 0 || xi < 0 || yi >= static_cast<long>(g.height) || xi >= static_cast<long>(g.width))
                continue;
              dkernel[((ky * g.kernel_w + kx) * g.in_channels + ci) * g.out_channels + co] +=
                  input[(yi * g.width + xi) * g.in_channels + ci] *
                  dout[(yo * g.out_width + xo) * g.out_channels + co];
            }
}

template <typename T>
void pool2d_forward(std::span<const T> input, std::span<T> output, PoolKind kind, const PoolGeometry& g) {
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t yo = 0; yo < g.out_height; ++yo)
      for (std::size_t xo = 0; xo < g.out_width; ++xo) {
        std::vector<T> window;
        for (std::size_t wy = 0; wy < g.window; ++wy)
          for (std::size_t wx = 0; wx < g.window; ++wx)
            window.push_back(input[((yo * g.stride + wy) * g.width + xo * g.stride + wx) * g.channels + c]);
        T r;
        if (kind == PoolKind::Max) {
          r = *std::max_element(window.begin(), window.end());
        } else {
          r = T(0);
          for (T v : window) r += v;
          r /= static_cast<T>(window.size());
        }
        output[(yo * g.out_width + xo) * g.channels + c] = r;
      }
}

}  // namespace reference

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

#define CARDIONET_INSTANTIATE(T)                                                                              \
  template void matmul<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t, std::size_t,       \
                          std::size_t);                                                                         \
  template void matmul_grad_a<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t,             \
                                 std::size_t, std::size_t);                                                     \
  template void matmul_grad_b<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t,             \
                                 std::size_t, std::size_t);                                                     \
  template void conv2d_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>, std::span<T>,     \
                                  const ConvGeometry&);                                                         \
  template void conv2d_backward_input<T>(std::span<const T>, std::span<const T>, std::span<T>,                  \
                                         const ConvGeometry&);                                                  \
  template void conv2d_backward_kernel<T>(std::span<const T>, std::span<const T>, std::span<T>,                 \
                                          const ConvGeometry&);                                                 \
  template void conv2d_backward_bias<T>(std::span<const T>, std::span<T>, const ConvGeometry&);                 \
  template void pool2d_forward<T>(std::span<const T>, std::span<T>, std::span<std::size_t>, PoolKind,           \
                                  const PoolGeometry&);                                                         \
  template void pool2d_backward<T>(std::span<const T>, std::span<const std::size_t>, std::span<T>, PoolKind,    \
                                   const PoolGeometry&);                                                        \
  template void reference::matmul<T>(std::span<const T>, std::span<const T>, std::span<T>, std::size_t,         \
                                     std::size_t, std::size_t);                                                 \
  template void reference::conv2d_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>,        \
                                             std::span<T>, const ConvGeometry&);                                \
  template void reference::conv2d_backward_input<T>(std::span<const T>, std::span<const T>, std::span<T>,       \
                                                    const ConvGeometry&);                                       \
  template void reference::conv2d_backward_kernel<T>(std::span<const T>, std::span<const T>, std::span<T>,      \
                                                     const ConvGeometry&);                                      \
  template void reference::pool2d_forward<T>(std::span<const T>, std::span<T>, PoolKind, const PoolGeometry&);

CARDIONET_INSTANTIATE(float)
CARDIONET_INSTANTIATE(double)

#undef CARDIONET_INSTANTIATE

}  // namespace cardionet::kernels
