#include "pacer/ad/tape.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "pacer/errors.hpp"

namespace pacer::ad {

namespace {
void check_same_len(const Vec& a, const Vec& b, const char* op) {
  if (a.size() != b.size()) {
    throw ConfigError(std::string(op) + ": operand lengths differ");
  }
}
}  // namespace

int Tape::push(Vec v, int rows, int cols, std::function<void(Tape&)> back) {
  Node n;
  n.val = std::move(v);
  n.adj.assign(n.val.size(), 0.0);
  n.rows = rows;
  n.cols = cols;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Vec v, int rows) {
  const int cols = rows > 0 ? static_cast<int>(v.size()) / rows : 0;
  return push(std::move(v), rows, cols, {});
}

int Tape::relu(int x) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = src.val[i] > 0.0 ? src.val[i] : 0.0;
  return push(std::move(out), src.rows, src.cols, [x](Tape& t) {
    const Vec& xv = t.nodes_[x].val;
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xv.size(); ++i)
      if (xv[i] > 0.0) xg[i] += self.adj[i];
  });
}

int Tape::tanh_op(int x) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(src.val[i]);
  return push(std::move(out), src.rows, src.cols, [x](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i)
      xg[i] += self.adj[i] * (1.0 - self.val[i] * self.val[i]);
  });
}

int Tape::exp_op(int x) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(src.val[i]);
  return push(std::move(out), src.rows, src.cols, [x](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) xg[i] += self.adj[i] * self.val[i];
  });
}

int Tape::square(int x) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = src.val[i] * src.val[i];
  return push(std::move(out), src.rows, src.cols, [x](Tape& t) {
    const Vec& xv = t.nodes_[x].val;
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) xg[i] += self.adj[i] * 2.0 * xv[i];
  });
}

int Tape::sqrt_op(int x) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(src.val[i]);
  return push(std::move(out), src.rows, src.cols, [x](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i)
      if (self.val[i] > 0.0) xg[i] += self.adj[i] * 0.5 / self.val[i];
  });
}

int Tape::cos_op(int x) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::cos(src.val[i]);
  return push(std::move(out), src.rows, src.cols, [x](Tape& t) {
    const Vec& xv = t.nodes_[x].val;
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) xg[i] += -self.adj[i] * std::sin(xv[i]);
  });
}

int Tape::clamp(int x, double lo, double hi) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(src.val[i], lo, hi);
  return push(std::move(out), src.rows, src.cols, [x, lo, hi](Tape& t) {
    const Vec& xv = t.nodes_[x].val;
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i)
      if (xv[i] > lo && xv[i] < hi) xg[i] += self.adj[i];
  });
}

int Tape::mul(int x, int y) {
  check_same_len(nodes_[x].val, nodes_[y].val, "mul");
  const Node& a = nodes_[x];
  Vec out(a.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.val[i] * nodes_[y].val[i];
  return push(std::move(out), a.rows, a.cols, [x, y](Tape& t) {
    const Vec& xv = t.nodes_[x].val;
    const Vec& yv = t.nodes_[y].val;
    Vec& xg = t.nodes_[x].adj;
    Vec& yg = t.nodes_[y].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xv.size(); ++i) {
      xg[i] += self.adj[i] * yv[i];
      yg[i] += self.adj[i] * xv[i];
    }
  });
}

int Tape::add(int x, int y) {
  check_same_len(nodes_[x].val, nodes_[y].val, "add");
  const Node& a = nodes_[x];
  Vec out(a.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.val[i] + nodes_[y].val[i];
  return push(std::move(out), a.rows, a.cols, [x, y](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    Vec& yg = t.nodes_[y].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) {
      xg[i] += self.adj[i];
      yg[i] += self.adj[i];
    }
  });
}

int Tape::sub(int x, int y) {
  check_same_len(nodes_[x].val, nodes_[y].val, "sub");
  const Node& a = nodes_[x];
  Vec out(a.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.val[i] - nodes_[y].val[i];
  return push(std::move(out), a.rows, a.cols, [x, y](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    Vec& yg = t.nodes_[y].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) {
      xg[i] += self.adj[i];
      yg[i] -= self.adj[i];
    }
  });
}

int Tape::scale(int x, double c) {
  const Node& src = nodes_[x];
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = c * src.val[i];
  return push(std::move(out), src.rows, src.cols, [x, c](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) xg[i] += c * self.adj[i];
  });
}

int Tape::elem_min(int x, int y) {
  check_same_len(nodes_[x].val, nodes_[y].val, "elem_min");
  const Node& a = nodes_[x];
  Vec out(a.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::min(a.val[i], nodes_[y].val[i]);
  return push(std::move(out), a.rows, a.cols, [x, y](Tape& t) {
    const Vec& xv = t.nodes_[x].val;
    const Vec& yv = t.nodes_[y].val;
    Vec& xg = t.nodes_[x].adj;
    Vec& yg = t.nodes_[y].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] <= yv[i])
        xg[i] += self.adj[i];
      else
        yg[i] += self.adj[i];
    }
  });
}

int Tape::axpb(int x, Vec a, Vec b) {
  const Node& src = nodes_[x];
  if (a.size() != src.val.size() || b.size() != src.val.size())
    throw ConfigError("axpb: coefficient lengths differ from operand");
  Vec out(src.val.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a[i] * src.val[i] + b[i];
  return push(std::move(out), src.rows, src.cols, [x, a = std::move(a)](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (size_t i = 0; i < xg.size(); ++i) xg[i] += a[i] * self.adj[i];
  });
}

int Tape::concat(int x, int y) {
  const Vec& xv = nodes_[x].val;
  const Vec& yv = nodes_[y].val;
  Vec out;
  out.reserve(xv.size() + yv.size());
  out.insert(out.end(), xv.begin(), xv.end());
  out.insert(out.end(), yv.begin(), yv.end());
  return push(std::move(out), 1, static_cast<int>(xv.size() + yv.size()),
              [x, y](Tape& t) {
                Vec& xg = t.nodes_[x].adj;
                Vec& yg = t.nodes_[y].adj;
                const Node& self = t.nodes_[t.cur_];
                for (size_t i = 0; i < xg.size(); ++i) xg[i] += self.adj[i];
                for (size_t i = 0; i < yg.size(); ++i)
                  yg[i] += self.adj[xg.size() + i];
              });
}

int Tape::slice(int x, int offset, int len) {
  const Vec& xv = nodes_[x].val;
  if (offset < 0 || len < 0 || offset + len > static_cast<int>(xv.size()))
    throw ConfigError("slice: range out of bounds");
  Vec out(xv.begin() + offset, xv.begin() + offset + len);
  return push(std::move(out), 1, len, [x, offset, len](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const Node& self = t.nodes_[t.cur_];
    for (int i = 0; i < len; ++i) xg[offset + i] += self.adj[i];
  });
}

int Tape::col_slice(int x, int col_off, int col_len) {
  const Node& src = nodes_[x];
  if (col_off < 0 || col_len < 0 || col_off + col_len > src.cols)
    throw ConfigError("col_slice: range out of bounds");
  Vec out(static_cast<size_t>(src.rows) * col_len);
  for (int r = 0; r < src.rows; ++r)
    for (int c = 0; c < col_len; ++c)
      out[static_cast<size_t>(r) * col_len + c] =
          src.val[static_cast<size_t>(r) * src.cols + col_off + c];
  return push(std::move(out), src.rows, col_len, [x, col_off, col_len](Tape& t) {
    const Node& self = t.nodes_[t.cur_];
    Vec& xg = t.nodes_[x].adj;
    const int xcols = t.nodes_[x].cols;
    for (int r = 0; r < self.rows; ++r)
      for (int c = 0; c < col_len; ++c)
        xg[static_cast<size_t>(r) * xcols + col_off + c] +=
            self.adj[static_cast<size_t>(r) * col_len + c];
  });
}

int Tape::sum(int x) {
  const Vec& xv = nodes_[x].val;
  double s = 0.0;
  for (double v : xv) s += v;
  return push({s}, 1, 1, [x](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const double g = t.nodes_[t.cur_].adj[0];
    for (double& v : xg) v += g;
  });
}

int Tape::mean(int x) {
  const Vec& xv = nodes_[x].val;
  const double inv = xv.empty() ? 0.0 : 1.0 / static_cast<double>(xv.size());
  double s = 0.0;
  for (double v : xv) s += v;
  return push({s * inv}, 1, 1, [x, inv](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const double g = t.nodes_[t.cur_].adj[0] * inv;
    for (double& v : xg) v += g;
  });
}

int Tape::weighted_sum(int x, Vec w) {
  const Vec& xv = nodes_[x].val;
  check_same_len(xv, w, "weighted_sum");
  double s = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) s += w[i] * xv[i];
  return push({s}, 1, 1, [x, w = std::move(w)](Tape& t) {
    Vec& xg = t.nodes_[x].adj;
    const double g = t.nodes_[t.cur_].adj[0];
    for (size_t i = 0; i < xg.size(); ++i) xg[i] += g * w[i];
  });
}

// Y = X·Wᵀ + b. Forward uses an axpy ordering over a transposed weight copy
// and backward uses axpy sweeps over W's rows, so every inner loop runs over
// contiguous memory and vectorizes.
int Tape::affine_rows(int x, const double* w, const double* b, double* grad_w,
                      double* grad_b, int in, int out, bool input_grad) {
  const Node& src = nodes_[x];
  if (src.cols != in)
    throw ConfigError("affine_rows: input has " + std::to_string(src.cols) +
                      " cols, layer expects " + std::to_string(in));
  const int n = src.rows;
  Vec y(static_cast<size_t>(n) * out);
  if (out >= 8 && n >= 2) {
    Vec wt(static_cast<size_t>(in) * out);
    for (int o = 0; o < out; ++o)
      for (int i = 0; i < in; ++i)
        wt[static_cast<size_t>(i) * out + o] = w[static_cast<size_t>(o) * in + i];
    for (int r = 0; r < n; ++r) {
      const double* xr = src.val.data() + static_cast<size_t>(r) * in;
      double* yr = y.data() + static_cast<size_t>(r) * out;
      std::copy(b, b + out, yr);
      for (int i = 0; i < in; ++i) {
        const double xi = xr[i];
        const double* wti = wt.data() + static_cast<size_t>(i) * out;
        for (int o = 0; o < out; ++o) yr[o] += xi * wti[o];
      }
    }
  } else {
    for (int r = 0; r < n; ++r) {
      const double* xr = src.val.data() + static_cast<size_t>(r) * in;
      double* yr = y.data() + static_cast<size_t>(r) * out;
      for (int o = 0; o < out; ++o) {
        const double* wo = w + static_cast<size_t>(o) * in;
        double acc = b[o];
        for (int i = 0; i < in; ++i) acc += wo[i] * xr[i];
        yr[o] = acc;
      }
    }
  }
  return push(std::move(y), n, out,
              [x, w, grad_w, grad_b, in, out, n, input_grad](Tape& t) {
                const Node& self = t.nodes_[t.cur_];
                const Vec& xv = t.nodes_[x].val;
                Vec& xg = t.nodes_[x].adj;
                for (int r = 0; r < n; ++r) {
                  const double* dyr = self.adj.data() + static_cast<size_t>(r) * out;
                  const double* xr = xv.data() + static_cast<size_t>(r) * in;
                  double* xgr = xg.data() + static_cast<size_t>(r) * in;
                  for (int o = 0; o < out; ++o) {
                    const double g = dyr[o];
                    if (g == 0.0) continue;
                    if (input_grad) {
                      const double* wo = w + static_cast<size_t>(o) * in;
                      for (int i = 0; i < in; ++i) xgr[i] += g * wo[i];
                    }
                    if (grad_w) {
                      double* gwo = grad_w + static_cast<size_t>(o) * in;
                      for (int i = 0; i < in; ++i) gwo[i] += g * xr[i];
                    }
                    if (grad_b) grad_b[o] += g;
                  }
                }
              });
}

int Tape::row_broadcast_mul(int e, int v) {
  const Node& me = nodes_[e];
  const Vec& vv = nodes_[v].val;
  if (static_cast<int>(vv.size()) != me.cols)
    throw ConfigError("row_broadcast_mul: vector length must equal cols");
  Vec out(me.val.size());
  for (int r = 0; r < me.rows; ++r)
    for (int c = 0; c < me.cols; ++c) {
      const size_t idx = static_cast<size_t>(r) * me.cols + c;
      out[idx] = me.val[idx] * vv[c];
    }
  return push(std::move(out), me.rows, me.cols, [e, v](Tape& t) {
    const Node& self = t.nodes_[t.cur_];
    const Vec& ev = t.nodes_[e].val;
    const Vec& vv = t.nodes_[v].val;
    Vec& eg = t.nodes_[e].adj;
    Vec& vg = t.nodes_[v].adj;
    for (int r = 0; r < self.rows; ++r)
      for (int c = 0; c < self.cols; ++c) {
        const size_t idx = static_cast<size_t>(r) * self.cols + c;
        eg[idx] += self.adj[idx] * vv[c];
        vg[c] += self.adj[idx] * ev[idx];
      }
  });
}

int Tape::row_broadcast_add(int e, int v) {
  const Node& me = nodes_[e];
  const Vec& vv = nodes_[v].val;
  if (static_cast<int>(vv.size()) != me.cols)
    throw ConfigError("row_broadcast_add: vector length must equal cols");
  Vec out(me.val.size());
  for (int r = 0; r < me.rows; ++r)
    for (int c = 0; c < me.cols; ++c) {
      const size_t idx = static_cast<size_t>(r) * me.cols + c;
      out[idx] = me.val[idx] + vv[c];
    }
  return push(std::move(out), me.rows, me.cols, [e, v](Tape& t) {
    const Node& self = t.nodes_[t.cur_];
    Vec& eg = t.nodes_[e].adj;
    Vec& vg = t.nodes_[v].adj;
    for (int r = 0; r < self.rows; ++r)
      for (int c = 0; c < self.cols; ++c) {
        const size_t idx = static_cast<size_t>(r) * self.cols + c;
        eg[idx] += self.adj[idx];
        vg[c] += self.adj[idx];
      }
  });
}

namespace {
// derivative of the asymmetric Huber quantile loss in its residual
inline double quantile_huber_grad(double delta, double tau, double kappa) {
  const double a = delta < 0.0 ? std::abs(tau - 1.0) : tau;
  if (std::abs(delta) <= kappa) return a * delta / kappa;
  return a * (delta > 0.0 ? 1.0 : -1.0);
}
inline double quantile_huber(double delta, double tau, double kappa) {
  const double a = delta < 0.0 ? std::abs(tau - 1.0) : tau;
  if (std::abs(delta) <= kappa) return a * delta * delta / (2.0 * kappa);
  return a * (std::abs(delta) - 0.5 * kappa);
}
}  // namespace

int Tape::quantile_huber_pair_loss(int z, Vec targets, Vec tau_hats,
                                   double kappa) {
  const Vec& zv = nodes_[z].val;
  check_same_len(zv, tau_hats, "quantile_huber_pair_loss");
  double loss = 0.0;
  for (double y : targets)
    for (size_t j = 0; j < zv.size(); ++j)
      loss += quantile_huber(y - zv[j], tau_hats[j], kappa);
  return push({loss}, 1, 1,
              [z, targets = std::move(targets), tau_hats = std::move(tau_hats),
               kappa](Tape& t) {
                const double g = t.nodes_[t.cur_].adj[0];
                const Vec& zv = t.nodes_[z].val;
                Vec& zg = t.nodes_[z].adj;
                for (double y : targets)
                  for (size_t j = 0; j < zv.size(); ++j)
                    zg[j] -= g * quantile_huber_grad(y - zv[j], tau_hats[j], kappa);
              });
}

int Tape::mmd_vstat(int x, Vec y_rows, int n_ref, double bandwidth_sq) {
  const Node& xs = nodes_[x];
  const int m = xs.rows;
  const int d = xs.cols;
  const int n = n_ref;
  if (m < 1 || n < 1) throw ConfigError("mmd_vstat: empty sample set");
  if (static_cast<int>(y_rows.size()) != n * d)
    throw ConfigError("mmd_vstat: reference shape mismatch");
  const double inv2h = 1.0 / (2.0 * bandwidth_sq);

  Vec kxx(static_cast<size_t>(m) * m);
  Vec kxy(static_cast<size_t>(m) * n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* xi = xs.val.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < m; ++j) {
      const double* xj = xs.val.data() + static_cast<size_t>(j) * d;
      double sq = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = xi[c] - xj[c];
        sq += diff * diff;
      }
      const double k = std::exp(-sq * inv2h);
      kxx[static_cast<size_t>(i) * m + j] = k;
      sxx += k;
    }
  }
  for (int i = 0; i < n; ++i) {
    const double* yi = y_rows.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < n; ++j) {
      const double* yj = y_rows.data() + static_cast<size_t>(j) * d;
      double sq = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = yi[c] - yj[c];
        sq += diff * diff;
      }
      syy += std::exp(-sq * inv2h);
    }
  }
  for (int i = 0; i < m; ++i) {
    const double* xi = xs.val.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < n; ++j) {
      const double* yj = y_rows.data() + static_cast<size_t>(j) * d;
      double sq = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = xi[c] - yj[c];
        sq += diff * diff;
      }
      const double k = std::exp(-sq * inv2h);
      kxy[static_cast<size_t>(i) * n + j] = k;
      sxy += k;
    }
  }
  const double msq = static_cast<double>(m) * m;
  const double nsq = static_cast<double>(n) * n;
  const double mn = static_cast<double>(m) * n;
  const double d2 = std::max(0.0, sxx / msq + syy / nsq - 2.0 * sxy / mn);
  const double dist = std::sqrt(d2);

  return push(
      {dist}, 1, 1,
      [x, y_rows = std::move(y_rows), kxx = std::move(kxx), kxy = std::move(kxy),
       m, n, d, bandwidth_sq, dist](Tape& t) {
        if (dist <= 1e-12) return;  // subgradient 0 at coincident samples
        const double g = t.nodes_[t.cur_].adj[0] / (2.0 * dist);
        const Vec& xv = t.nodes_[x].val;
        Vec& xg = t.nodes_[x].adj;
        const double cxx = 2.0 / (static_cast<double>(m) * m * bandwidth_sq);
        const double cxy = 2.0 / (static_cast<double>(m) * n * bandwidth_sq);
        for (int p = 0; p < m; ++p) {
          const double* xp = xv.data() + static_cast<size_t>(p) * d;
          double* gp = xg.data() + static_cast<size_t>(p) * d;
          for (int j = 0; j < m; ++j) {
            const double k = kxx[static_cast<size_t>(p) * m + j];
            const double* xj = xv.data() + static_cast<size_t>(j) * d;
            for (int c = 0; c < d; ++c) gp[c] += g * cxx * k * (xj[c] - xp[c]);
          }
          for (int j = 0; j < n; ++j) {
            const double k = kxy[static_cast<size_t>(p) * n + j];
            const double* yj = y_rows.data() + static_cast<size_t>(j) * d;
            for (int c = 0; c < d; ++c) gp[c] -= g * cxy * k * (yj[c] - xp[c]);
          }
        }
      });
}

void Tape::backward(int output, double seed) {
  if (nodes_.empty()) throw UsageError("backward called on an empty tape");
  if (output < 0 || output >= size())
    throw UsageError("backward: output node out of range");
  for (Node& n : nodes_) std::fill(n.adj.begin(), n.adj.end(), 0.0);
  Node& out = nodes_[output];
  for (double& v : out.adj) v = seed;
  for (int id = output; id >= 0; --id) {
    if (!nodes_[id].back) continue;
    cur_ = id;
    nodes_[id].back(*this);
  }
}

}  // namespace pacer::ad
