#include "mfp/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace mfp::nn {
namespace {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Map = Eigen::Map<MatR<T>>;
template <class T>
using CMap = Eigen::Map<const MatR<T>>;
template <class T>
using SMap = Eigen::Map<MatR<T>, 0, Eigen::OuterStride<>>;
template <class T>
using CSMap = Eigen::Map<const MatR<T>, 0, Eigen::OuterStride<>>;

struct SeqDims {
  std::size_t batch;
  std::size_t channels;
  std::size_t length;
  bool batched;
};

template <class T>
SeqDims seq_dims(const Tensor<T>& x, const char* op) {
  if (x.rank() == 2) {
    return {1, x.dim(0), x.dim(1), false};
  }
  if (x.rank() == 3) {
    return {x.dim(0), x.dim(1), x.dim(2), true};
  }
  throw ShapeError(std::string(op) + ": expected (channels, length) or "
                   "(batch, channels, length), got " + to_string(x.shape()));
}

Shape seq_shape(const SeqDims& d, std::size_t channels, std::size_t length) {
  if (d.batched) {
    return {d.batch, channels, length};
  }
  return {channels, length};
}

template <class T>
bool wants(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

template <class T>
std::span<T> gbuf(const Tensor<T>& t) {
  return t.node().grad_buffer();
}

template <class T>
void check_bias(const Tensor<T>& bias, std::size_t n, const char* op) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != n)) {
    throw ShapeError(std::string(op) + ": bias shape " + to_string(bias.shape()) +
                     " does not match " + std::to_string(n) + " outputs");
  }
}

// (batch, channels, length) -> (channels, batch * length)
template <class T>
void to_channel_major(std::span<const T> src, std::size_t B, std::size_t C, std::size_t L,
                      std::span<T> dst) {
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const T* s = src.data() + (b * C + c) * L;
      std::copy(s, s + L, dst.data() + c * B * L + b * L);
    }
  }
}

} // namespace

template <class T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t padding) {
  const auto d = seq_dims(input, "conv1d");
  if (weight.rank() != 3) {
    throw ShapeError("conv1d: weight must be (out, in, kernel), got " +
                     to_string(weight.shape()));
  }
  const std::size_t O = weight.dim(0), C = weight.dim(1), K = weight.dim(2);
  if (C != d.channels) {
    throw ShapeError("conv1d: input has " + std::to_string(d.channels) +
                     " channels but weight expects " + std::to_string(C));
  }
  if (K > d.length + 2 * padding) {
    throw ShapeError("conv1d: kernel " + std::to_string(K) + " longer than padded input " +
                     std::to_string(d.length + 2 * padding));
  }
  check_bias(bias, O, "conv1d");
  const std::size_t B = d.batch, L = d.length;
  const std::size_t Lo = L + 2 * padding - K + 1;
  const std::size_t N = B * Lo;
  const auto x = input.data();

  auto cols = std::make_shared<std::vector<T>>(C * K * N, T(0));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < K; ++k) {
      T* row = cols->data() + (c * K + k) * N;
      for (std::size_t b = 0; b < B; ++b) {
        const T* src = x.data() + (b * C + c) * L;
        for (std::size_t t = 0; t < Lo; ++t) {
          const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) -
                                   static_cast<std::ptrdiff_t>(padding);
          if (s >= 0 && s < static_cast<std::ptrdiff_t>(L)) {
            row[b * Lo + t] = src[s];
          }
        }
      }
    }
  }

  MatR<T> Y = CMap<T>(weight.data().data(), O, C * K) * CMap<T>(cols->data(), C * K, N);
  std::vector<T> out(B * O * Lo);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) {
      const T bo = bias.defined() ? bias.data()[o] : T(0);
      T* dst = out.data() + (b * O + o) * Lo;
      for (std::size_t t = 0; t < Lo; ++t) {
        dst[t] = Y(o, b * Lo + t) + bo;
      }
    }
  }

  return Tensor<T>::make_result(
      seq_shape(d, O, Lo), std::move(out), {input, weight, bias},
      [input, weight, bias, cols, B, C, L, O, K, Lo, N, padding](detail::Node<T>& self) {
        MatR<T> GY(O, N);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t o = 0; o < O; ++o) {
            const T* g = self.grad.data() + (b * O + o) * Lo;
            for (std::size_t t = 0; t < Lo; ++t) {
              GY(o, b * Lo + t) = g[t];
            }
          }
        }
        const CMap<T> X(cols->data(), C * K, N);
        if (wants(weight)) {
          Map<T> dW(gbuf(weight).data(), O, C * K);
          dW.noalias() += GY * X.transpose();
        }
        if (wants(bias)) {
          auto db = gbuf(bias);
          for (std::size_t o = 0; o < O; ++o) {
            db[o] += GY.row(o).sum();
          }
        }
        if (wants(input)) {
          MatR<T> dX = CMap<T>(weight.data().data(), O, C * K).transpose() * GY;
          auto dx = gbuf(input);
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t k = 0; k < K; ++k) {
              for (std::size_t b = 0; b < B; ++b) {
                T* dst = dx.data() + (b * C + c) * L;
                for (std::size_t t = 0; t < Lo; ++t) {
                  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + k) -
                                           static_cast<std::ptrdiff_t>(padding);
                  if (s >= 0 && s < static_cast<std::ptrdiff_t>(L)) {
                    dst[s] += dX(c * K + k, b * Lo + t);
                  }
                }
              }
            }
          }
        }
      });
}

template <class T>
Tensor<T> tconv1d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                  std::size_t padding) {
  const auto d = seq_dims(input, "tconv1d");
  if (weight.rank() != 3) {
    throw ShapeError("tconv1d: weight must be (out, in, kernel), got " +
                     to_string(weight.shape()));
  }
  const std::size_t O = weight.dim(0), C = weight.dim(1), K = weight.dim(2);
  if (C != d.channels) {
    throw ShapeError("tconv1d: input has " + std::to_string(d.channels) +
                     " channels but weight expects " + std::to_string(C));
  }
  const std::size_t B = d.batch, L = d.length;
  const std::size_t full = L + K - 1;
  if (full <= 2 * padding) {
    throw ShapeError("tconv1d: padding " + std::to_string(padding) + " crops everything");
  }
  check_bias(bias, O, "tconv1d");
  const std::size_t Lo = full - 2 * padding;
  const std::size_t N = B * L;

  // Wr(o*K + k, c) = w[o, c, k]
  auto wr = std::make_shared<MatR<T>>(O * K, C);
  const auto w = weight.data();
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t k = 0; k < K; ++k) {
        (*wr)(o * K + k, c) = w[(o * C + c) * K + k];
      }
    }
  }
  auto xcm = std::make_shared<std::vector<T>>(C * N);
  to_channel_major<T>(input.data(), B, C, L, *xcm);
  MatR<T> P = (*wr) * CMap<T>(xcm->data(), C, N);

  std::vector<T> out(B * O * Lo, T(0));
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) {
      T* dst = out.data() + (b * O + o) * Lo;
      if (bias.defined()) {
        std::fill(dst, dst + Lo, bias.data()[o]);
      }
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < L; ++i) {
          const std::size_t u = i + k;
          if (u >= padding && u - padding < Lo) {
            dst[u - padding] += P(o * K + k, b * L + i);
          }
        }
      }
    }
  }

  return Tensor<T>::make_result(
      seq_shape(d, O, Lo), std::move(out), {input, weight, bias},
      [input, weight, bias, wr, xcm, B, C, L, O, K, Lo, N, padding](detail::Node<T>& self) {
        MatR<T> dP = MatR<T>::Zero(O * K, N);
        for (std::size_t b = 0; b < B; ++b) {
          for (std::size_t o = 0; o < O; ++o) {
            const T* g = self.grad.data() + (b * O + o) * Lo;
            for (std::size_t k = 0; k < K; ++k) {
              for (std::size_t i = 0; i < L; ++i) {
                const std::size_t u = i + k;
                if (u >= padding && u - padding < Lo) {
                  dP(o * K + k, b * L + i) = g[u - padding];
                }
              }
            }
          }
        }
        if (wants(weight)) {
          MatR<T> dWr = dP * CMap<T>(xcm->data(), C, N).transpose();
          auto dw = gbuf(weight);
          for (std::size_t o = 0; o < O; ++o) {
            for (std::size_t c = 0; c < C; ++c) {
              for (std::size_t k = 0; k < K; ++k) {
                dw[(o * C + c) * K + k] += dWr(o * K + k, c);
              }
            }
          }
        }
        if (wants(bias)) {
          auto db = gbuf(bias);
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t o = 0; o < O; ++o) {
              const T* g = self.grad.data() + (b * O + o) * Lo;
              T s = 0;
              for (std::size_t t = 0; t < Lo; ++t) {
                s += g[t];
              }
              db[o] += s;
            }
          }
        }
        if (wants(input)) {
          MatR<T> dX = wr->transpose() * dP;
          auto dx = gbuf(input);
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t c = 0; c < C; ++c) {
              T* dst = dx.data() + (b * C + c) * L;
              for (std::size_t i = 0; i < L; ++i) {
                dst[i] += dX(c, b * L + i);
              }
            }
          }
        }
      });
}

template <class T>
Tensor<T> relu(const Tensor<T>& input) {
  const auto x = input.data();
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > T(0) ? x[i] : T(0);
  }
  return Tensor<T>::make_result(input.shape(), std::move(out), {input},
                                [input](detail::Node<T>& self) {
                                  const auto x = input.data();
                                  auto dx = gbuf(input);
                                  for (std::size_t i = 0; i < x.size(); ++i) {
                                    if (x[i] > T(0)) {
                                      dx[i] += self.grad[i];
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> maxpool1d(const Tensor<T>& input) {
  const auto d = seq_dims(input, "maxpool1d");
  if (d.length < 2) {
    throw ShapeError("maxpool1d: length must be at least 2, got " + std::to_string(d.length));
  }
  const std::size_t Lo = d.length / 2;
  const std::size_t rows = d.batch * d.channels;
  const auto x = input.data();
  std::vector<T> out(rows * Lo);
  auto argmax = std::make_shared<std::vector<std::size_t>>(rows * Lo);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < Lo; ++t) {
      const std::size_t i0 = r * d.length + 2 * t;
      const std::size_t pick = x[i0 + 1] > x[i0] ? i0 + 1 : i0;
      out[r * Lo + t] = x[pick];
      (*argmax)[r * Lo + t] = pick;
    }
  }
  return Tensor<T>::make_result(seq_shape(d, d.channels, Lo), std::move(out), {input},
                                [input, argmax](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t i = 0; i < argmax->size(); ++i) {
                                    dx[(*argmax)[i]] += self.grad[i];
                                  }
                                });
}

template <class T>
Tensor<T> adaptive_avgpool1d(const Tensor<T>& input) {
  const auto d = seq_dims(input, "adaptive_avgpool1d");
  if (d.length < 1) {
    throw ShapeError("adaptive_avgpool1d: empty input");
  }
  const std::size_t rows = d.batch * d.channels, L = d.length;
  const auto x = input.data();
  std::vector<T> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    T s = 0;
    for (std::size_t t = 0; t < L; ++t) {
      s += x[r * L + t];
    }
    out[r] = s / static_cast<T>(L);
  }
  return Tensor<T>::make_result(seq_shape(d, d.channels, 1), std::move(out), {input},
                                [input, rows, L](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    const T g = self.grad[r] / static_cast<T>(L);
                                    for (std::size_t t = 0; t < L; ++t) {
                                      dx[r * L + t] += g;
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> upsample_nearest(const Tensor<T>& input, std::size_t out_length) {
  const auto d = seq_dims(input, "upsample_nearest");
  if (out_length < d.length) {
    throw ShapeError("upsample_nearest: out_length " + std::to_string(out_length) +
                     " shorter than input length " + std::to_string(d.length));
  }
  const std::size_t rows = d.batch * d.channels, L = d.length;
  const auto x = input.data();
  std::vector<T> out(rows * out_length);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < out_length; ++t) {
      out[r * out_length + t] = x[r * L + t * L / out_length];
    }
  }
  return Tensor<T>::make_result(seq_shape(d, d.channels, out_length), std::move(out),
                                {input}, [input, rows, L, out_length](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    for (std::size_t t = 0; t < out_length; ++t) {
                                      dx[r * L + t * L / out_length] +=
                                          self.grad[r * out_length + t];
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 1 && input.rank() != 2) {
    throw ShapeError("linear: expected (features) or (batch, features), got " +
                     to_string(input.shape()));
  }
  if (weight.rank() != 2) {
    throw ShapeError("linear: weight must be (out, in), got " + to_string(weight.shape()));
  }
  const bool batched = input.rank() == 2;
  const std::size_t B = batched ? input.dim(0) : 1;
  const std::size_t in = input.shape().back();
  const std::size_t O = weight.dim(0);
  if (weight.dim(1) != in) {
    throw ShapeError("linear: input has " + std::to_string(in) +
                     " features but weight expects " + std::to_string(weight.dim(1)));
  }
  check_bias(bias, O, "linear");
  MatR<T> Y = CMap<T>(input.data().data(), B, in) *
              CMap<T>(weight.data().data(), O, in).transpose();
  if (bias.defined()) {
    Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.data().data(), O);
  }
  std::vector<T> out(Y.data(), Y.data() + B * O);
  Shape shape = batched ? Shape{B, O} : Shape{O};
  return Tensor<T>::make_result(
      std::move(shape), std::move(out), {input, weight, bias},
      [input, weight, bias, B, in, O](detail::Node<T>& self) {
        const CMap<T> GY(self.grad.data(), B, O);
        if (wants(input)) {
          Map<T> dX(gbuf(input).data(), B, in);
          dX.noalias() += GY * CMap<T>(weight.data().data(), O, in);
        }
        if (wants(weight)) {
          Map<T> dW(gbuf(weight).data(), O, in);
          dW.noalias() += GY.transpose() * CMap<T>(input.data().data(), B, in);
        }
        if (wants(bias)) {
          auto db = gbuf(bias);
          for (std::size_t o = 0; o < O; ++o) {
            db[o] += GY.col(o).sum();
          }
        }
      });
}

template <class T>
Tensor<T> softmax(const Tensor<T>& input) {
  if (input.rank() < 1 || input.shape().back() == 0) {
    throw ShapeError("softmax: needs a non-empty last axis");
  }
  const std::size_t n = input.shape().back();
  const std::size_t rows = input.numel() / n;
  const auto x = input.data();
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * n;
    T* yr = out.data() + r * n;
    const T m = *std::max_element(xr, xr + n);
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      yr[i] = std::exp(xr[i] - m);
      s += yr[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      yr[i] /= s;
    }
  }
  auto y = std::make_shared<std::vector<T>>(out);
  return Tensor<T>::make_result(input.shape(), std::move(out), {input},
                                [input, y, rows, n](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    const T* yr = y->data() + r * n;
                                    const T* g = self.grad.data() + r * n;
                                    T dot = 0;
                                    for (std::size_t i = 0; i < n; ++i) {
                                      dot += g[i] * yr[i];
                                    }
                                    for (std::size_t i = 0; i < n; ++i) {
                                      dx[r * n + i] += yr[i] * (g[i] - dot);
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> bank_mix(const Tensor<T>& activations, const Tensor<T>& bank) {
  if (bank.rank() != 3) {
    throw ShapeError("bank_mix: bank must be (groups, templates, horizon), got " +
                     to_string(bank.shape()));
  }
  const std::size_t G = bank.dim(0), S = bank.dim(1), H = bank.dim(2);
  const bool batched = activations.rank() == 3;
  if (!(activations.rank() == 2 || batched) || activations.shape().back() != S ||
      activations.dim(batched ? 1 : 0) != G) {
    throw ShapeError("bank_mix: activations " + to_string(activations.shape()) +
                     " incompatible with bank " + to_string(bank.shape()));
  }
  const std::size_t B = batched ? activations.dim(0) : 1;
  std::vector<T> out(B * G * H);
  const T* r = activations.data().data();
  const T* s = bank.data().data();
  for (std::size_t g = 0; g < G; ++g) {
    SMap<T> Og(out.data() + g * H, B, H, Eigen::OuterStride<>(G * H));
    Og.noalias() = CSMap<T>(r + g * S, B, S, Eigen::OuterStride<>(G * S)) *
                   CMap<T>(s + g * S * H, S, H);
  }
  Shape shape = batched ? Shape{B, G, H} : Shape{G, H};
  return Tensor<T>::make_result(
      std::move(shape), std::move(out), {activations, bank},
      [activations, bank, B, G, S, H](detail::Node<T>& self) {
        for (std::size_t g = 0; g < G; ++g) {
          const CSMap<T> Gg(self.grad.data() + g * H, B, H, Eigen::OuterStride<>(G * H));
          if (wants(activations)) {
            SMap<T> dR(gbuf(activations).data() + g * S, B, S, Eigen::OuterStride<>(G * S));
            dR.noalias() += Gg * CMap<T>(bank.data().data() + g * S * H, S, H).transpose();
          }
          if (wants(bank)) {
            Map<T> dS(gbuf(bank).data() + g * S * H, S, H);
            dS.noalias() += CSMap<T>(activations.data().data() + g * S, B, S,
                                     Eigen::OuterStride<>(G * S))
                                .transpose() *
                            Gg;
          }
        }
      });
}

template <class T>
Tensor<T> combine_scale(const Tensor<T>& shape, const Tensor<T>& mul, const Tensor<T>& add) {
  if (shape.rank() < 2) {
    throw ShapeError("combine_scale: shape prediction must be (..., d, horizon)");
  }
  Shape lead(shape.shape().begin(), shape.shape().end() - 1);
  if (mul.shape() != lead || add.shape() != lead) {
    throw ShapeError("combine_scale: scales " + to_string(mul.shape()) + "/" +
                     to_string(add.shape()) + " do not match shape rows " + to_string(lead));
  }
  const std::size_t H = shape.shape().back();
  const std::size_t rows = mul.numel();
  const auto a = shape.data();
  const auto m = mul.data();
  const auto c = add.data();
  std::vector<T> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < H; ++t) {
      out[r * H + t] = m[r] * a[r * H + t] + c[r];
    }
  }
  return Tensor<T>::make_result(
      shape.shape(), std::move(out), {shape, mul, add},
      [shape, mul, add, rows, H](detail::Node<T>& self) {
        const auto a = shape.data();
        const auto m = mul.data();
        const bool ws = wants(shape), wm = wants(mul), wa = wants(add);
        std::span<T> ds, dm, da;
        if (ws) ds = gbuf(shape);
        if (wm) dm = gbuf(mul);
        if (wa) da = gbuf(add);
        for (std::size_t r = 0; r < rows; ++r) {
          T sm = 0, sa = 0;
          for (std::size_t t = 0; t < H; ++t) {
            const T g = self.grad[r * H + t];
            if (ws) ds[r * H + t] += g * m[r];
            sm += g * a[r * H + t];
            sa += g;
          }
          if (wm) dm[r] += sm;
          if (wa) da[r] += sa;
        }
      });
}

template <class T>
Tensor<T> standardize_last(const Tensor<T>& input, double epsilon) {
  if (input.rank() < 1 || input.shape().back() == 0) {
    throw ShapeError("standardize_last: needs a non-empty last axis");
  }
  const std::size_t n = input.shape().back();
  const std::size_t rows = input.numel() / n;
  const auto x = input.data();
  std::vector<T> out(x.size());
  auto scale = std::make_shared<std::vector<double>>(rows);
  auto floored = std::make_shared<std::vector<char>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * n;
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += xr[i];
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t i = 0; i < n; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    (*floored)[r] = sd <= epsilon;
    (*scale)[r] = std::max(sd, epsilon);
    for (std::size_t i = 0; i < n; ++i) {
      out[r * n + i] = static_cast<T>((xr[i] - mean) / (*scale)[r]);
    }
  }
  auto z = std::make_shared<std::vector<T>>(out);
  return Tensor<T>::make_result(
      input.shape(), std::move(out), {input},
      [input, z, scale, floored, rows, n](detail::Node<T>& self) {
        auto dx = gbuf(input);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = self.grad.data() + r * n;
          const T* zr = z->data() + r * n;
          double gm = 0, gz = 0;
          for (std::size_t i = 0; i < n; ++i) {
            gm += g[i];
            gz += static_cast<double>(g[i]) * zr[i];
          }
          gm /= static_cast<double>(n);
          gz /= static_cast<double>(n);
          if ((*floored)[r]) {
            gz = 0;
          }
          for (std::size_t i = 0; i < n; ++i) {
            dx[r * n + i] += static_cast<T>((g[i] - gm - zr[i] * gz) / (*scale)[r]);
          }
        }
      });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& input, Shape shape) {
  if (nn::numel(shape) != input.numel()) {
    throw ShapeError("reshape: cannot view " + to_string(input.shape()) + " as " +
                     to_string(shape));
  }
  std::vector<T> out(input.data().begin(), input.data().end());
  return Tensor<T>::make_result(std::move(shape), std::move(out), {input},
                                [input](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t i = 0; i < dx.size(); ++i) {
                                    dx[i] += self.grad[i];
                                  }
                                });
}

template <class T>
Tensor<T> slice_last(const Tensor<T>& input, std::size_t begin, std::size_t end) {
  if (input.rank() < 1 || begin >= end || end > input.shape().back()) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " + to_string(input.shape()));
  }
  const std::size_t n = input.shape().back(), w = end - begin;
  const std::size_t rows = input.numel() / n;
  Shape shape = input.shape();
  shape.back() = w;
  const auto x = input.data();
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + r * n + begin, w, out.data() + r * w);
  }
  return Tensor<T>::make_result(std::move(shape), std::move(out), {input},
                                [input, rows, n, w, begin](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    for (std::size_t i = 0; i < w; ++i) {
                                      dx[r * n + begin + i] += self.grad[r * w + i];
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> stack1(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) {
    throw ShapeError("stack1: nothing to stack");
  }
  const Shape& s0 = parts.front().shape();
  if (s0.empty()) {
    throw ShapeError("stack1: parts need a leading batch axis");
  }
  for (const auto& p : parts) {
    if (p.shape() != s0) {
      throw ShapeError("stack1: mismatched shapes " + to_string(s0) + " and " +
                       to_string(p.shape()));
    }
  }
  const std::size_t B = s0[0], n = parts.size();
  const std::size_t inner = nn::numel(s0) / B;
  Shape shape = s0;
  shape.insert(shape.begin() + 1, n);
  std::vector<T> out(B * n * inner);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = parts[i].data();
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(src.data() + b * inner, inner, out.data() + (b * n + i) * inner);
    }
  }
  return Tensor<T>::make_result(std::move(shape), std::move(out), parts,
                                [parts, B, n, inner](detail::Node<T>& self) {
                                  for (std::size_t i = 0; i < n; ++i) {
                                    if (!wants(parts[i])) continue;
                                    auto dx = gbuf(parts[i]);
                                    for (std::size_t b = 0; b < B; ++b) {
                                      const T* g = self.grad.data() + (b * n + i) * inner;
                                      for (std::size_t k = 0; k < inner; ++k) {
                                        dx[b * inner + k] += g[k];
                                      }
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> select1(const Tensor<T>& input, std::span<const std::size_t> indices) {
  if (input.rank() < 2) {
    throw ShapeError("select1: expected (batch, n, ...), got " + to_string(input.shape()));
  }
  const std::size_t B = input.dim(0), n = input.dim(1);
  if (indices.size() != B) {
    throw ShapeError("select1: " + std::to_string(indices.size()) + " indices for batch of " +
                     std::to_string(B));
  }
  for (auto i : indices) {
    if (i >= n) {
      throw ShapeError("select1: index " + std::to_string(i) + " out of range " +
                       std::to_string(n));
    }
  }
  const std::size_t inner = input.numel() / (B * n);
  Shape shape = input.shape();
  shape.erase(shape.begin() + 1);
  const auto x = input.data();
  std::vector<T> out(B * inner);
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(x.data() + (b * n + indices[b]) * inner, inner, out.data() + b * inner);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return Tensor<T>::make_result(std::move(shape), std::move(out), {input},
                                [input, idx, B, n, inner](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t b = 0; b < B; ++b) {
                                    T* dst = dx.data() + (b * n + idx[b]) * inner;
                                    for (std::size_t k = 0; k < inner; ++k) {
                                      dst[k] += self.grad[b * inner + k];
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> take1(const Tensor<T>& input, std::size_t index) {
  if (input.rank() < 2) {
    throw ShapeError("take1: expected (batch, n, ...), got " + to_string(input.shape()));
  }
  std::vector<std::size_t> idx(input.dim(0), index);
  return select1(input, std::span<const std::size_t>(idx));
}

template <class T>
Tensor<T> rmse_rows(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape() || pred.rank() < 1) {
    throw ShapeError("rmse_rows: shape mismatch " + to_string(pred.shape()) + " vs " +
                     to_string(target.shape()));
  }
  const std::size_t B = pred.dim(0);
  const std::size_t M = pred.numel() / B;
  const auto p = pred.data();
  const auto t = target.data();
  std::vector<T> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    double s = 0;
    for (std::size_t k = 0; k < M; ++k) {
      const double e = static_cast<double>(p[b * M + k]) - t[b * M + k];
      s += e * e;
    }
    out[b] = static_cast<T>(std::sqrt(s / static_cast<double>(M)));
  }
  auto err = std::make_shared<std::vector<T>>(out);
  return Tensor<T>::make_result(Shape{B}, std::move(out), {pred},
                                [pred, target, err, B, M](detail::Node<T>& self) {
                                  auto dp = gbuf(pred);
                                  const auto p = pred.data();
                                  const auto t = target.data();
                                  for (std::size_t b = 0; b < B; ++b) {
                                    const T e = (*err)[b];
                                    if (e == T(0)) continue;
                                    const T c = self.grad[b] / (static_cast<T>(M) * e);
                                    for (std::size_t k = 0; k < M; ++k) {
                                      dp[b * M + k] += c * (p[b * M + k] - t[b * M + k]);
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> sum(const Tensor<T>& input) {
  double s = 0;
  for (T v : input.data()) s += v;
  return Tensor<T>::make_result(Shape{}, {static_cast<T>(s)}, {input},
                                [input](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (auto& v : dx) v += self.grad[0];
                                });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a, b},
                                [a, b](detail::Node<T>& self) {
                                  for (const auto* t : {&a, &b}) {
                                    if (!wants(*t)) continue;
                                    auto dx = gbuf(*t);
                                    for (std::size_t i = 0; i < dx.size(); ++i) {
                                      dx[i] += self.grad[i];
                                    }
                                  }
                                });
}

template <class T>
Tensor<T> scale(const Tensor<T>& input, T factor) {
  std::vector<T> out(input.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * input.data()[i];
  return Tensor<T>::make_result(input.shape(), std::move(out), {input},
                                [input, factor](detail::Node<T>& self) {
                                  auto dx = gbuf(input);
                                  for (std::size_t i = 0; i < dx.size(); ++i) {
                                    dx[i] += factor * self.grad[i];
                                  }
                                });
}

template <class T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || labels.size() != logits.dim(0)) {
    throw ShapeError("cross_entropy: logits " + to_string(logits.shape()) + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t B = logits.dim(0), n = logits.dim(1);
  const auto x = logits.data();
  auto probs = std::make_shared<std::vector<T>>(B * n);
  double loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] >= n) {
      throw ShapeError("cross_entropy: label " + std::to_string(labels[b]) +
                       " out of range for " + std::to_string(n) + " classes");
    }
    const T* xr = x.data() + b * n;
    const T m = *std::max_element(xr, xr + n);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(static_cast<double>(xr[i] - m));
    for (std::size_t i = 0; i < n; ++i) {
      (*probs)[b * n + i] = static_cast<T>(std::exp(static_cast<double>(xr[i] - m)) / s);
    }
    loss += std::log(s) + m - xr[labels[b]];
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return Tensor<T>::make_result(Shape{}, {static_cast<T>(loss)}, {logits},
                                [logits, probs, lab, B, n](detail::Node<T>& self) {
                                  auto dx = gbuf(logits);
                                  const T g = self.grad[0];
                                  for (std::size_t b = 0; b < B; ++b) {
                                    for (std::size_t i = 0; i < n; ++i) {
                                      dx[b * n + i] += g * ((*probs)[b * n + i] -
                                                            (i == lab[b] ? T(1) : T(0)));
                                    }
                                  }
                                });
}

#define MFP_INSTANTIATE_OPS(T)                                                                \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t); \
  template Tensor<T> tconv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                             std::size_t);                                                    \
  template Tensor<T> relu(const Tensor<T>&);                                                  \
  template Tensor<T> maxpool1d(const Tensor<T>&);                                             \
  template Tensor<T> adaptive_avgpool1d(const Tensor<T>&);                                    \
  template Tensor<T> upsample_nearest(const Tensor<T>&, std::size_t);                         \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> softmax(const Tensor<T>&);                                               \
  template Tensor<T> bank_mix(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> combine_scale(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template Tensor<T> standardize_last(const Tensor<T>&, double);                              \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                        \
  template Tensor<T> slice_last(const Tensor<T>&, std::size_t, std::size_t);                  \
  template Tensor<T> stack1(const std::vector<Tensor<T>>&);                                   \
  template Tensor<T> take1(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> select1(const Tensor<T>&, std::span<const std::size_t>);                 \
  template Tensor<T> rmse_rows(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> sum(const Tensor<T>&);                                                   \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                              \
  template Tensor<T> cross_entropy(const Tensor<T>&, std::span<const std::size_t>);

MFP_INSTANTIATE_OPS(float)
MFP_INSTANTIATE_OPS(double)

} // namespace mfp::nn
