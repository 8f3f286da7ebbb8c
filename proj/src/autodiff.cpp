#include "mza/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "mza/kernels.hpp"

namespace mza::ad {

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

Tensor as_matrix(const Tensor& t) {
  return Tensor({t.rows(), t.cols()}, t.values());
}
}  // namespace

Var Tape::push(Tensor value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), std::move(backward)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_slot(Grads& grads, int id, const Tensor& like) {
  Tensor& g = grads[id];
  if (g.size() != like.size()) g = Tensor(like.shape());
  return g;
}

double Tape::scalar(Var v) const {
  const Tensor& t = value(v);
  require(t.size() == 1, "scalar() on a non-scalar value");
  return t[0];
}

Var Tape::param(const std::string& name) {
  if (auto it = param_ids_.find(name); it != param_ids_.end()) {
    return Var{it->second};
  }
  auto p = params_->find(name);
  if (p == params_->end()) {
    throw std::out_of_range("unknown parameter '" + name + "'");
  }
  Var v = push(p->second);
  param_ids_.emplace(name, v.id);
  return v;
}

Var Tape::constant(Tensor value) { return push(as_matrix(value)); }

Var Tape::linear(Var x, Var w, Var b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  const auto rows = xv.rows(), in = xv.cols(), out = wv.cols();
  require(wv.rows() == in, "linear: weight rows != input width");
  require(static_cast<std::int64_t>(bv.size()) == out,
          "linear: bias length != output width");
  Tensor y = Tensor::matrix(rows, out);
  kernels::affine(xv.data(), rows, in, wv.data(), bv.data(), out, y.data());
  const int xi = x.id, wi = w.id, bi = b.id;
  return push(std::move(y), [this, xi, wi, bi, rows, in, out](
                                const Tensor& gy, Grads& grads) {
    const Tensor& xv = nodes_[xi].value;
    const Tensor& wv = nodes_[wi].value;
    Tensor& gx = grad_slot(grads, xi, xv);
    Tensor& gw = grad_slot(grads, wi, wv);
    Tensor& gb = grad_slot(grads, bi, nodes_[bi].value);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* gyr = gy.data() + r * out;
      const double* xr = xv.data() + r * in;
      double* gxr = gx.data() + r * in;
      for (std::int64_t j = 0; j < out; ++j) gb[j] += gyr[j];
      for (std::int64_t i = 0; i < in; ++i) {
        const double* wrow = wv.data() + i * out;
        double* gwrow = gw.data() + i * out;
        double acc = 0.0;
        for (std::int64_t j = 0; j < out; ++j) {
          acc += gyr[j] * wrow[j];
          gwrow[j] += xr[i] * gyr[j];
        }
        gxr[i] += acc;
      }
    }
  });
}

Var Tape::elu(Var x) {
  Tensor y = as_matrix(value(x));
  for (auto& v : y.values()) v = kernels::elu(v);
  const int xi = x.id;
  return push(std::move(y), [this, xi](const Tensor& gy, Grads& grads) {
    const Tensor& xv = nodes_[xi].value;
    Tensor& gx = grad_slot(grads, xi, xv);
    for (std::size_t i = 0; i < xv.size(); ++i) {
      gx[i] += gy[i] * (xv[i] > 0.0 ? 1.0 : std::exp(xv[i]));
    }
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.rows() == bv.rows(), "concat_cols: row mismatch");
  const auto rows = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor y = Tensor::matrix(rows, ca + cb);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t j = 0; j < ca; ++j) y.at(r, j) = av.at(r, j);
    for (std::int64_t j = 0; j < cb; ++j) y.at(r, ca + j) = bv.at(r, j);
  }
  const int ai = a.id, bi = b.id;
  return push(std::move(y), [this, ai, bi, rows, ca, cb](const Tensor& gy,
                                                         Grads& grads) {
    Tensor& ga = grad_slot(grads, ai, nodes_[ai].value);
    Tensor& gb = grad_slot(grads, bi, nodes_[bi].value);
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t j = 0; j < ca; ++j) {
        ga[r * ca + j] += gy[r * (ca + cb) + j];
      }
      for (std::int64_t j = 0; j < cb; ++j) {
        gb[r * cb + j] += gy[r * (ca + cb) + ca + j];
      }
    }
  });
}

Var Tape::minmax_normalize(Var x) {
  const Tensor& xv = value(x);
  const auto rows = xv.rows(), n = xv.cols();
  Tensor y = Tensor::matrix(rows, n);
  std::vector<std::int64_t> lo(rows), hi(rows);
  std::vector<double> scale(rows);
  for (std::int64_t r = 0; r < rows; ++r) {
    kernels::minmax_row(xv.data() + r * n, n, y.data() + r * n, &lo[r],
                        &hi[r], &scale[r]);
  }
  const int xi = x.id;
  const int yi = static_cast<int>(nodes_.size());
  return push(std::move(y), [this, xi, yi, rows, n, lo = std::move(lo),
                             hi = std::move(hi), scale = std::move(scale)](
                                const Tensor& gy, Grads& grads) {
    const Tensor& yv = nodes_[yi].value;
    Tensor& gx = grad_slot(grads, xi, nodes_[xi].value);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double s = scale[r];
      double g_min = 0.0;
      double g_max = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        const double g = gy[r * n + i];
        const double yi_v = yv[r * n + i];
        gx[r * n + i] += g / s;
        g_min += g * (yi_v - 1.0) / s;
        g_max -= g * yi_v / s;
      }
      gx[r * n + lo[r]] += g_min;
      gx[r * n + hi[r]] += g_max;
    }
  });
}

Var Tape::scale_gradient(Var x, double factor) {
  const int xi = x.id;
  return push(as_matrix(value(x)),
              [this, xi, factor](const Tensor& gy, Grads& grads) {
                Tensor& gx = grad_slot(grads, xi, nodes_[xi].value);
                for (std::size_t i = 0; i < gy.size(); ++i) {
                  gx[i] += factor * gy[i];
                }
              });
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.size() == bv.size(), "add: size mismatch");
  Tensor y = as_matrix(av);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const int ai = a.id, bi = b.id;
  return push(std::move(y), [this, ai, bi](const Tensor& gy, Grads& grads) {
    Tensor& ga = grad_slot(grads, ai, nodes_[ai].value);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    Tensor& gb = grad_slot(grads, bi, nodes_[bi].value);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  require(av.size() == bv.size(), "mul: size mismatch");
  Tensor y = as_matrix(av);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  const int ai = a.id, bi = b.id;
  return push(std::move(y), [this, ai, bi](const Tensor& gy, Grads& grads) {
    const Tensor& av = nodes_[ai].value;
    const Tensor& bv = nodes_[bi].value;
    Tensor& ga = grad_slot(grads, ai, av);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv[i];
    Tensor& gb = grad_slot(grads, bi, bv);
    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av[i];
  });
}

Var Tape::scale(Var x, double factor) {
  Tensor y = as_matrix(value(x));
  for (auto& v : y.values()) v *= factor;
  const int xi = x.id;
  return push(std::move(y),
              [this, xi, factor](const Tensor& gy, Grads& grads) {
                Tensor& gx = grad_slot(grads, xi, nodes_[xi].value);
                for (std::size_t i = 0; i < gy.size(); ++i) {
                  gx[i] += factor * gy[i];
                }
              });
}

Var Tape::sum(Var x) {
  double total = 0.0;
  for (double v : value(x).values()) total += v;
  const int xi = x.id;
  return push(Tensor({1, 1}, {total}),
              [this, xi](const Tensor& gy, Grads& grads) {
                Tensor& gx = grad_slot(grads, xi, nodes_[xi].value);
                for (auto& v : gx.values()) v += gy[0];
              });
}

Var Tape::softmax_cross_entropy(Var logits, const Tensor& targets,
                                std::span<const double> row_weights) {
  const Tensor& lv = value(logits);
  const auto rows = lv.rows(), n = lv.cols();
  require(targets.rows() == rows && targets.cols() == n,
          "cross entropy: target shape mismatch");
  require(static_cast<std::int64_t>(row_weights.size()) == rows,
          "cross entropy: weight count mismatch");
  Tensor probs = Tensor::matrix(rows, n);
  double loss = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* l = lv.data() + r * n;
    double mx = l[0];
    for (std::int64_t j = 1; j < n; ++j) mx = std::max(mx, l[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < n; ++j) z += std::exp(l[j] - mx);
    const double log_z = mx + std::log(z);
    double row_loss = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      probs.at(r, j) = std::exp(l[j] - log_z);
      row_loss -= targets.at(r, j) * (l[j] - log_z);
    }
    loss += row_weights[r] * row_loss;
  }
  const int li = logits.id;
  std::vector<double> weights(row_weights.begin(), row_weights.end());
  return push(Tensor({1, 1}, {loss}),
              [this, li, rows, n, probs = std::move(probs), targets,
               weights = std::move(weights)](const Tensor& gy, Grads& grads) {
                Tensor& gl = grad_slot(grads, li, nodes_[li].value);
                for (std::int64_t r = 0; r < rows; ++r) {
                  double mass = 0.0;
                  for (std::int64_t j = 0; j < n; ++j) {
                    mass += targets.at(r, j);
                  }
                  const double w = gy[0] * weights[r];
                  for (std::int64_t j = 0; j < n; ++j) {
                    gl[r * n + j] +=
                        w * (probs.at(r, j) * mass - targets.at(r, j));
                  }
                }
              });
}

ParameterSet Tape::backward(Var loss) const {
  require(value(loss).size() == 1, "backward needs a scalar loss");
  Grads grads(nodes_.size());
  grads[loss.id] = Tensor(value(loss).shape(), {1.0});
  for (int i = loss.id; i >= 0; --i) {
    if (grads[i].size() == 0 || !nodes_[i].backward) continue;
    nodes_[i].backward(grads[i], grads);
  }
  ParameterSet out = zeros_like(*params_);
  for (const auto& [name, id] : param_ids_) {
    if (grads[id].size() == 0) continue;
    Tensor& dst = out.at(name);
    dst = Tensor(dst.shape(), grads[id].values());
  }
  return out;
}

}  // namespace mza::ad
