#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgfdc/graph.hpp"
#include "pgfdc/tensor.hpp"

// Differentiable tensor ops. Every op takes a Graph*; pass nullptr to run in
// inference mode (no tape, no gradient buffers). Ops never mutate inputs.
namespace pgfdc {

namespace detail {
inline int last_dim(const Tensor& x, const char* op) {
  if (x.ndim() < 1) throw std::invalid_argument(std::string(op) + ": tensor has no dims");
  return x.dim(x.ndim() - 1);
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace detail

inline Tensor add(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (g)
    g->record(out, {a, b}, [a, b, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) {
        a.grad()[i] += out.grad()[i];
        b.grad()[i] += out.grad()[i];
      }
    });
  return out;
}

inline Tensor sub(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (g)
    g->record(out, {a, b}, [a, b, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) {
        a.grad()[i] += out.grad()[i];
        b.grad()[i] -= out.grad()[i];
      }
    });
  return out;
}

inline Tensor mul(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (g)
    g->record(out, {a, b}, [a, b, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) {
        a.grad()[i] += out.grad()[i] * b.data()[i];
        b.grad()[i] += out.grad()[i] * a.data()[i];
      }
    });
  return out;
}

inline Tensor scale(Graph* g, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = c * x.data()[i];
  if (g)
    g->record(out, {x}, [x, out, c]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) x.grad()[i] += c * out.grad()[i];
    });
  return out;
}

inline Tensor add_scalar(Graph* g, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = x.data()[i] + c;
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) x.grad()[i] += out.grad()[i];
    });
  return out;
}

inline Tensor neg(Graph* g, const Tensor& x) { return scale(g, x, -1.0); }

// a[N,K] x b[K,M] -> [N,M]
inline Tensor matmul(Graph* g, const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  const int N = a.dim(0), K = a.dim(1), M = b.dim(1);
  Tensor out = Tensor::zeros({N, M});
  for (int i = 0; i < N; ++i) {
    double* orow = out.data() + static_cast<std::ptrdiff_t>(i) * M;
    const double* arow = a.data() + static_cast<std::ptrdiff_t>(i) * K;
    for (int k = 0; k < K; ++k) {
      const double av = arow[k];
      const double* brow = b.data() + static_cast<std::ptrdiff_t>(k) * M;
      for (int j = 0; j < M; ++j) orow[j] += av * brow[j];
    }
  }
  if (g)
    g->record(out, {a, b}, [a, b, out, N, K, M]() mutable {
      for (int i = 0; i < N; ++i) {
        const double* gout = out.grad() + static_cast<std::ptrdiff_t>(i) * M;
        double* garow = a.grad() + static_cast<std::ptrdiff_t>(i) * K;
        const double* arow = a.data() + static_cast<std::ptrdiff_t>(i) * K;
        for (int k = 0; k < K; ++k) {
          const double* brow = b.data() + static_cast<std::ptrdiff_t>(k) * M;
          double* gbrow = b.grad() + static_cast<std::ptrdiff_t>(k) * M;
          double acc = 0.0;
          const double av = arow[k];
          for (int j = 0; j < M; ++j) {
            acc += gout[j] * brow[j];
            gbrow[j] += av * gout[j];
          }
          garow[k] += acc;
        }
      }
    });
  return out;
}

// x[N,M] + b[M], broadcast over rows.
inline Tensor bias_add(Graph* g, const Tensor& x, const Tensor& b) {
  if (x.ndim() != 2 || b.ndim() != 1 || b.dim(0) != x.dim(1))
    throw std::invalid_argument("bias_add: shapes " + shape_str(x.shape()) + " + " +
                                shape_str(b.shape()));
  const int N = x.dim(0), M = x.dim(1);
  Tensor out = Tensor::zeros({N, M});
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j) out.data()[i * M + j] = x.data()[i * M + j] + b.data()[j];
  if (g)
    g->record(out, {x, b}, [x, b, out, N, M]() mutable {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) {
          x.grad()[i * M + j] += out.grad()[i * M + j];
          b.grad()[j] += out.grad()[i * M + j];
        }
    });
  return out;
}

// Fully connected layer: x[N,K] * w[K,M] + b[M].
inline Tensor dense(Graph* g, const Tensor& x, const Tensor& w, const Tensor& b) {
  return bias_add(g, matmul(g, x, w), b);
}

// x[N,C,H,W] conv w[F,C,kh,kw] + b[F], stride 1 -> [N,F,H+2p-kh+1,W+2p-kw+1]
inline Tensor conv2d(Graph* g, const Tensor& x, const Tensor& w, const Tensor& b, int pad = 0) {
  if (x.ndim() != 4 || w.ndim() != 4 || b.ndim() != 1)
    throw std::invalid_argument("conv2d: expected x[N,C,H,W], w[F,C,kh,kw], b[F], got " +
                                shape_str(x.shape()) + ", " + shape_str(w.shape()) + ", " +
                                shape_str(b.shape()));
  if (w.dim(1) != x.dim(1) || b.dim(0) != w.dim(0))
    throw std::invalid_argument("conv2d: channel mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(w.shape()));
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int F = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int OH = H + 2 * pad - kh + 1, OW = W + 2 * pad - kw + 1;
  if (OH <= 0 || OW <= 0)
    throw std::invalid_argument("conv2d: kernel " + shape_str(w.shape()) + " too large for input " +
                                shape_str(x.shape()));
  Tensor out = Tensor::zeros({N, F, OH, OW});

  auto run_forward = [=]() mutable {
    for (int n = 0; n < N; ++n)
      for (int f = 0; f < F; ++f) {
        double* oplane = out.data() + (static_cast<std::ptrdiff_t>(n) * F + f) * OH * OW;
        const double bv = b.data()[f];
        for (int i = 0; i < OH * OW; ++i) oplane[i] = bv;
        for (int c = 0; c < C; ++c) {
          const double* iplane = x.data() + (static_cast<std::ptrdiff_t>(n) * C + c) * H * W;
          const double* wplane = w.data() + (static_cast<std::ptrdiff_t>(f) * C + c) * kh * kw;
          for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
              const double wv = wplane[ki * kw + kj];
              const int oh_lo = std::max(0, pad - ki), oh_hi = std::min(OH, H + pad - ki);
              const int ow_lo = std::max(0, pad - kj), ow_hi = std::min(OW, W + pad - kj);
              for (int oh = oh_lo; oh < oh_hi; ++oh) {
                const double* irow = iplane + (oh + ki - pad) * W + (kj - pad);
                double* orow = oplane + oh * OW;
                for (int ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wv * irow[ow];
              }
            }
        }
      }
  };
  run_forward();

  if (g)
    g->record(out, {x, w, b}, [x, w, b, out, N, C, H, W, F, kh, kw, OH, OW, pad]() mutable {
      for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f) {
          const double* gplane = out.grad() + (static_cast<std::ptrdiff_t>(n) * F + f) * OH * OW;
          double gb = 0.0;
          for (int i = 0; i < OH * OW; ++i) gb += gplane[i];
          b.grad()[f] += gb;
          for (int c = 0; c < C; ++c) {
            const double* iplane = x.data() + (static_cast<std::ptrdiff_t>(n) * C + c) * H * W;
            double* giplane = x.grad() + (static_cast<std::ptrdiff_t>(n) * C + c) * H * W;
            const double* wplane = w.data() + (static_cast<std::ptrdiff_t>(f) * C + c) * kh * kw;
            double* gwplane = w.grad() + (static_cast<std::ptrdiff_t>(f) * C + c) * kh * kw;
            for (int ki = 0; ki < kh; ++ki)
              for (int kj = 0; kj < kw; ++kj) {
                const double wv = wplane[ki * kw + kj];
                double gw = 0.0;
                const int oh_lo = std::max(0, pad - ki), oh_hi = std::min(OH, H + pad - ki);
                const int ow_lo = std::max(0, pad - kj), ow_hi = std::min(OW, W + pad - kj);
                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                  const double* irow = iplane + (oh + ki - pad) * W + (kj - pad);
                  double* girow = giplane + (oh + ki - pad) * W + (kj - pad);
                  const double* grow = gplane + oh * OW;
                  for (int ow = ow_lo; ow < ow_hi; ++ow) {
                    gw += irow[ow] * grow[ow];
                    girow[ow] += wv * grow[ow];
                  }
                }
                gwplane[ki * kw + kj] += gw;
              }
          }
        }
    });
  return out;
}

// 2x2 max pooling, stride 2, floor on odd dims. Ties route to the first
// element in row-major scan order.
inline Tensor maxpool2x2(Graph* g, const Tensor& x) {
  if (x.ndim() != 4)
    throw std::invalid_argument("maxpool2x2: expected [N,C,H,W], got " + shape_str(x.shape()));
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int OH = H / 2, OW = W / 2;
  if (OH == 0 || OW == 0)
    throw std::invalid_argument("maxpool2x2: input too small " + shape_str(x.shape()));
  Tensor out = Tensor::zeros({N, C, OH, OW});
  std::vector<int> argmax(static_cast<std::size_t>(out.size()));
  for (int nc = 0; nc < N * C; ++nc) {
    const double* iplane = x.data() + static_cast<std::ptrdiff_t>(nc) * H * W;
    double* oplane = out.data() + static_cast<std::ptrdiff_t>(nc) * OH * OW;
    int* aplane = argmax.data() + static_cast<std::ptrdiff_t>(nc) * OH * OW;
    for (int oh = 0; oh < OH; ++oh)
      for (int ow = 0; ow < OW; ++ow) {
        int best = (2 * oh) * W + 2 * ow;
        double bv = iplane[best];
        const int cand[3] = {(2 * oh) * W + 2 * ow + 1, (2 * oh + 1) * W + 2 * ow,
                             (2 * oh + 1) * W + 2 * ow + 1};
        for (int idx : cand)
          if (iplane[idx] > bv) {
            bv = iplane[idx];
            best = idx;
          }
        oplane[oh * OW + ow] = bv;
        aplane[oh * OW + ow] = nc * H * W + best;
      }
  }
  if (g)
    g->record(out, {x}, [x, out, argmax]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) x.grad()[argmax[static_cast<std::size_t>(i)]] += out.grad()[i];
    });
  return out;
}

inline Tensor relu(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i)
        if (x.data()[i] > 0.0) x.grad()[i] += out.grad()[i];
    });
  return out;
}

inline Tensor tanh_op(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = std::tanh(x.data()[i]);
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i)
        x.grad()[i] += out.grad()[i] * (1.0 - out.data()[i] * out.data()[i]);
    });
  return out;
}

// alpha = 1: x > 0 ? x : exp(x) - 1
inline Tensor elu(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i)
    out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : std::expm1(x.data()[i]);
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i)
        x.grad()[i] += out.grad()[i] * (x.data()[i] > 0.0 ? 1.0 : out.data()[i] + 1.0);
    });
  return out;
}

inline Tensor sigmoid(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = detail::stable_sigmoid(x.data()[i]);
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i)
        x.grad()[i] += out.grad()[i] * out.data()[i] * (1.0 - out.data()[i]);
    });
  return out;
}

inline Tensor exp_op(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = std::exp(x.data()[i]);
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) x.grad()[i] += out.grad()[i] * out.data()[i];
    });
  return out;
}

inline Tensor log_op(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = std::log(x.data()[i]);
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) x.grad()[i] += out.grad()[i] / x.data()[i];
    });
  return out;
}

// Gradient passes where lo <= x <= hi, zero outside.
inline Tensor clamp(Graph* g, const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = std::min(hi, std::max(lo, x.data()[i]));
  if (g)
    g->record(out, {x}, [x, out, lo, hi]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i)
        if (x.data()[i] >= lo && x.data()[i] <= hi) x.grad()[i] += out.grad()[i];
    });
  return out;
}

// Elementwise min; gradient routes to a on ties.
inline Tensor minimum(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "minimum");
  Tensor out = Tensor::zeros(a.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) out.data()[i] = std::min(a.data()[i], b.data()[i]);
  if (g)
    g->record(out, {a, b}, [a, b, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) {
        if (a.data()[i] <= b.data()[i])
          a.grad()[i] += out.grad()[i];
        else
          b.grad()[i] += out.grad()[i];
      }
    });
  return out;
}

// Softmax over the last dim, numerically stabilized per row.
inline Tensor softmax(Graph* g, const Tensor& x) {
  const int M = detail::last_dim(x, "softmax");
  const int rows = x.size() / M;
  Tensor out = Tensor::zeros(x.shape());
  for (int r = 0; r < rows; ++r) {
    const double* in = x.data() + static_cast<std::ptrdiff_t>(r) * M;
    double* o = out.data() + static_cast<std::ptrdiff_t>(r) * M;
    double mx = in[0];
    for (int j = 1; j < M; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (int j = 0; j < M; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    for (int j = 0; j < M; ++j) o[j] /= z;
  }
  if (g)
    g->record(out, {x}, [x, out, rows, M]() mutable {
      for (int r = 0; r < rows; ++r) {
        const double* y = out.data() + static_cast<std::ptrdiff_t>(r) * M;
        const double* gy = out.grad() + static_cast<std::ptrdiff_t>(r) * M;
        double* gx = x.grad() + static_cast<std::ptrdiff_t>(r) * M;
        double dot = 0.0;
        for (int j = 0; j < M; ++j) dot += gy[j] * y[j];
        for (int j = 0; j < M; ++j) gx[j] += y[j] * (gy[j] - dot);
      }
    });
  return out;
}

inline Tensor log_softmax(Graph* g, const Tensor& x) {
  const int M = detail::last_dim(x, "log_softmax");
  const int rows = x.size() / M;
  Tensor out = Tensor::zeros(x.shape());
  for (int r = 0; r < rows; ++r) {
    const double* in = x.data() + static_cast<std::ptrdiff_t>(r) * M;
    double* o = out.data() + static_cast<std::ptrdiff_t>(r) * M;
    double mx = in[0];
    for (int j = 1; j < M; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (int j = 0; j < M; ++j) z += std::exp(in[j] - mx);
    const double lse = mx + std::log(z);
    for (int j = 0; j < M; ++j) o[j] = in[j] - lse;
  }
  if (g)
    g->record(out, {x}, [x, out, rows, M]() mutable {
      for (int r = 0; r < rows; ++r) {
        const double* lsm = out.data() + static_cast<std::ptrdiff_t>(r) * M;
        const double* gy = out.grad() + static_cast<std::ptrdiff_t>(r) * M;
        double* gx = x.grad() + static_cast<std::ptrdiff_t>(r) * M;
        double gsum = 0.0;
        for (int j = 0; j < M; ++j) gsum += gy[j];
        for (int j = 0; j < M; ++j) gx[j] += gy[j] - std::exp(lsm[j]) * gsum;
      }
    });
  return out;
}

// log(sigmoid(x)) computed without overflow at either tail.
inline Tensor log_sigmoid(Graph* g, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const int n = out.size();
  for (int i = 0; i < n; ++i) {
    const double v = x.data()[i];
    out.data()[i] = v < 0.0 ? v - std::log1p(std::exp(v)) : -std::log1p(std::exp(-v));
  }
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i)
        x.grad()[i] += out.grad()[i] * (1.0 - detail::stable_sigmoid(x.data()[i]));
    });
  return out;
}

// [N, ...] -> [N, prod(rest)]
inline Tensor flatten(Graph* g, const Tensor& x);

inline Tensor reshape(Graph* g, const Tensor& x, std::vector<int> shape) {
  if (shape_size(shape) != x.size())
    throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape) +
                                " changes element count");
  Tensor out = Tensor::zeros(std::move(shape));
  std::memcpy(out.data(), x.data(), static_cast<std::size_t>(x.size()) * sizeof(double));
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const int n = out.size();
      for (int i = 0; i < n; ++i) x.grad()[i] += out.grad()[i];
    });
  return out;
}

inline Tensor flatten(Graph* g, const Tensor& x) {
  if (x.ndim() < 2)
    throw std::invalid_argument("flatten: expected at least 2 dims, got " + shape_str(x.shape()));
  return reshape(g, x, {x.dim(0), x.size() / x.dim(0)});
}

// a[N,A] ++ b[N,B] -> [N,A+B]
inline Tensor concat_cols(Graph* g, const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(0) != b.dim(0))
    throw std::invalid_argument("concat_cols: shapes " + shape_str(a.shape()) + " ++ " +
                                shape_str(b.shape()));
  const int N = a.dim(0), A = a.dim(1), B = b.dim(1);
  Tensor out = Tensor::zeros({N, A + B});
  for (int i = 0; i < N; ++i) {
    std::memcpy(out.data() + static_cast<std::ptrdiff_t>(i) * (A + B),
                a.data() + static_cast<std::ptrdiff_t>(i) * A,
                static_cast<std::size_t>(A) * sizeof(double));
    std::memcpy(out.data() + static_cast<std::ptrdiff_t>(i) * (A + B) + A,
                b.data() + static_cast<std::ptrdiff_t>(i) * B,
                static_cast<std::size_t>(B) * sizeof(double));
  }
  if (g)
    g->record(out, {a, b}, [a, b, out, N, A, B]() mutable {
      for (int i = 0; i < N; ++i) {
        for (int j = 0; j < A; ++j) a.grad()[i * A + j] += out.grad()[i * (A + B) + j];
        for (int j = 0; j < B; ++j) b.grad()[i * B + j] += out.grad()[i * (A + B) + A + j];
      }
    });
  return out;
}

inline Tensor sum(Graph* g, const Tensor& x) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s);
  if (g)
    g->record(out, {x}, [x, out]() mutable {
      const double go = out.grad()[0];
      for (int i = 0; i < x.size(); ++i) x.grad()[i] += go;
    });
  return out;
}

inline Tensor mean(Graph* g, const Tensor& x) {
  const double inv = 1.0 / x.size();
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s * inv);
  if (g)
    g->record(out, {x}, [x, out, inv]() mutable {
      const double go = out.grad()[0] * inv;
      for (int i = 0; i < x.size(); ++i) x.grad()[i] += go;
    });
  return out;
}

// x[N,M] -> [N], summing each row.
inline Tensor row_sum(Graph* g, const Tensor& x) {
  if (x.ndim() != 2) throw std::invalid_argument("row_sum: expected [N,M], got " + shape_str(x.shape()));
  const int N = x.dim(0), M = x.dim(1);
  Tensor out = Tensor::zeros({N});
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int j = 0; j < M; ++j) s += x.data()[i * M + j];
    out.data()[i] = s;
  }
  if (g)
    g->record(out, {x}, [x, out, N, M]() mutable {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < M; ++j) x.grad()[i * M + j] += out.grad()[i];
    });
  return out;
}

// x[N,M], idx[N] -> [N] with out[n] = x[n, idx[n]].
inline Tensor select_columns(Graph* g, const Tensor& x, const std::vector<int>& idx) {
  if (x.ndim() != 2)
    throw std::invalid_argument("select_columns: expected [N,M], got " + shape_str(x.shape()));
  const int N = x.dim(0), M = x.dim(1);
  if (static_cast<int>(idx.size()) != N)
    throw std::invalid_argument("select_columns: " + std::to_string(idx.size()) +
                                " indices for " + std::to_string(N) + " rows");
  for (int i : idx)
    if (i < 0 || i >= M)
      throw std::invalid_argument("select_columns: index " + std::to_string(i) +
                                  " out of range for " + shape_str(x.shape()));
  Tensor out = Tensor::zeros({N});
  for (int i = 0; i < N; ++i) out.data()[i] = x.data()[i * M + idx[static_cast<std::size_t>(i)]];
  if (g)
    g->record(out, {x}, [x, out, idx, N, M]() mutable {
      for (int i = 0; i < N; ++i)
        x.grad()[i * M + idx[static_cast<std::size_t>(i)]] += out.grad()[i];
    });
  return out;
}

// Mean over rows of -log softmax(logits)[target]; the standard classification
// loss on raw logits.
inline Tensor cross_entropy_logits(Graph* g, const Tensor& logits, const std::vector<int>& targets) {
  if (logits.ndim() != 2)
    throw std::invalid_argument("cross_entropy_logits: expected [N,C], got " +
                                shape_str(logits.shape()));
  const int N = logits.dim(0), C = logits.dim(1);
  if (static_cast<int>(targets.size()) != N)
    throw std::invalid_argument("cross_entropy_logits: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(N) + " rows");
  for (int t : targets)
    if (t < 0 || t >= C)
      throw std::invalid_argument("cross_entropy_logits: target " + std::to_string(t) +
                                  " out of range for " + shape_str(logits.shape()));
  double total = 0.0;
  for (int r = 0; r < N; ++r) {
    const double* in = logits.data() + static_cast<std::ptrdiff_t>(r) * C;
    double mx = in[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, in[j]);
    double z = 0.0;
    for (int j = 0; j < C; ++j) z += std::exp(in[j] - mx);
    total += mx + std::log(z) - in[targets[static_cast<std::size_t>(r)]];
  }
  Tensor out = Tensor::scalar(total / N);
  if (g)
    g->record(out, {logits}, [logits, out, targets, N, C]() mutable {
      const double go = out.grad()[0] / N;
      for (int r = 0; r < N; ++r) {
        const double* in = logits.data() + static_cast<std::ptrdiff_t>(r) * C;
        double* gin = logits.grad() + static_cast<std::ptrdiff_t>(r) * C;
        double mx = in[0];
        for (int j = 1; j < C; ++j) mx = std::max(mx, in[j]);
        double z = 0.0;
        for (int j = 0; j < C; ++j) z += std::exp(in[j] - mx);
        for (int j = 0; j < C; ++j) gin[j] += go * std::exp(in[j] - mx) / z;
        gin[targets[static_cast<std::size_t>(r)]] -= go;
      }
    });
  return out;
}

// Mean squared error over all elements.
inline Tensor mse(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mse");
  const int n = a.size();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  Tensor out = Tensor::scalar(s / n);
  if (g)
    g->record(out, {a, b}, [a, b, out, n]() mutable {
      const double go = out.grad()[0] * 2.0 / n;
      for (int i = 0; i < n; ++i) {
        const double d = a.data()[i] - b.data()[i];
        a.grad()[i] += go * d;
        b.grad()[i] -= go * d;
      }
    });
  return out;
}

// a[N,M], b[N,M] -> [N] with out[n] = 0.5 * sum_m (a-b)^2; per-row halved
// squared distance.
inline Tensor row_half_sq_dist(Graph* g, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "row_half_sq_dist");
  if (a.ndim() != 2)
    throw std::invalid_argument("row_half_sq_dist: expected [N,M], got " + shape_str(a.shape()));
  const int N = a.dim(0), M = a.dim(1);
  Tensor out = Tensor::zeros({N});
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int j = 0; j < M; ++j) {
      const double d = a.data()[i * M + j] - b.data()[i * M + j];
      s += d * d;
    }
    out.data()[i] = 0.5 * s;
  }
  if (g)
    g->record(out, {a, b}, [a, b, out, N, M]() mutable {
      for (int i = 0; i < N; ++i) {
        const double go = out.grad()[i];
        for (int j = 0; j < M; ++j) {
          const double d = a.data()[i * M + j] - b.data()[i * M + j];
          a.grad()[i * M + j] += go * d;
          b.grad()[i * M + j] -= go * d;
        }
      }
    });
  return out;
}

// Plain constant [N, num_classes] one-hot rows.
inline Tensor one_hot(const std::vector<int>& idx, int num_classes) {
  Tensor out = Tensor::zeros({static_cast<int>(idx.size()), num_classes});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= num_classes)
      throw std::invalid_argument("one_hot: index " + std::to_string(idx[i]) + " out of range " +
                                  std::to_string(num_classes));
    out.data()[i * static_cast<std::size_t>(num_classes) + static_cast<std::size_t>(idx[i])] = 1.0;
  }
  return out;
}

}  // namespace pgfdc
