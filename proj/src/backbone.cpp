#include "ddcl/backbone.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ddcl/errors.hpp"
#include "ddcl/kernels.hpp"
#include "ddcl/numerics.hpp"

namespace ddcl {

std::size_t MlpParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& L : layers) n += L.W.size() + L.b.size() + L.gamma.size() + L.beta.size();
  return n;
}

MlpParams mlp_init(const MlpSpec& spec, Rng& rng) {
  if (spec.dims.size() < 2) throw ConfigError("mlp_init: need at least input and output dims");
  MlpParams p;
  const std::size_t nl = spec.dims.size() - 1;
  for (std::size_t l = 0; l < nl; ++l) {
    MlpLayer L;
    const std::size_t in = spec.dims[l], out = spec.dims[l + 1];
    L.W = Matrix(in, out);
    const double sd = std::sqrt(2.0 / static_cast<double>(in));
    for (double& w : L.W.data) w = rng.normal(0.0, sd);
    L.b.assign(out, 0.0);
    const bool hidden = l + 1 < nl;
    L.relu = hidden;
    L.norm = hidden ? spec.batchnorm : spec.output_norm;
    L.affine = hidden;
    if (L.norm) {
      if (L.affine) {
        L.gamma.assign(out, 1.0);
        L.beta.assign(out, 0.0);
      }
      L.running_mean.assign(out, 0.0);
      L.running_var.assign(out, 1.0);
    }
    p.layers.push_back(std::move(L));
  }
  return p;
}

namespace {

Matrix forward_impl(const MlpParams& params, MlpParams* mut, const Matrix& X, Mode mode, ForwardCache* cache) {
  if (X.cols != params.in_dim())
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(X.cols) + " columns, expected " +
                                std::to_string(params.in_dim()));
  const std::size_t n = X.rows;
  if (mode == Mode::Train && n < 2) throw std::invalid_argument("mlp_forward: train mode needs a batch of at least 2");
  if (cache) {
    cache->mode = mode;
    cache->layers.assign(params.layers.size(), {});
  }
  Matrix h = X;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const MlpLayer& L = params.layers[l];
    const std::size_t out = L.W.cols;
    Matrix pre = matmul(h, L.W);
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, L.b.data(), pre.row_ptr(i), out);
    Matrix post = pre;
    Matrix xhat;
    Vec inv_std;
    if (L.norm) {
      Vec mu(out), var(out);
      if (mode == Mode::Train) {
        mu = col_means(pre);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < out; ++c) var[c] += (pre(i, c) - mu[c]) * (pre(i, c) - mu[c]);
        for (double& v : var) v /= static_cast<double>(n);
        if (mut) {
          MlpLayer& M = mut->layers[l];
          for (std::size_t c = 0; c < out; ++c) {
            M.running_mean[c] = params.momentum * M.running_mean[c] + (1.0 - params.momentum) * mu[c];
            M.running_var[c] = params.momentum * M.running_var[c] + (1.0 - params.momentum) * var[c];
          }
        }
      } else {
        mu = L.running_mean;
        var = L.running_var;
      }
      inv_std.resize(out);
      for (std::size_t c = 0; c < out; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + params.eps);
      xhat = Matrix(n, out);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < out; ++c) {
          xhat(i, c) = (pre(i, c) - mu[c]) * inv_std[c];
          post(i, c) = L.affine ? L.gamma[c] * xhat(i, c) + L.beta[c] : xhat(i, c);
        }
    }
    if (L.relu)
      for (double& v : post.data) v = v > 0.0 ? v : 0.0;
    if (cache) {
      LayerCache& C = cache->layers[l];
      C.input = std::move(h);
      C.pre = std::move(pre);
      C.xhat = std::move(xhat);
      C.inv_std = std::move(inv_std);
      C.post = post;
    }
    h = std::move(post);
  }
  return h;
}

}  // namespace

Matrix mlp_forward(MlpParams& params, const Matrix& X, Mode mode, ForwardCache* cache) {
  return forward_impl(params, &params, X, mode, cache);
}

Matrix mlp_forward_const(const MlpParams& params, const Matrix& X, Mode mode, ForwardCache* cache) {
  return forward_impl(params, nullptr, X, mode, cache);
}

MlpGrads mlp_backward(const MlpParams& params, const ForwardCache& cache, const Matrix& grad_out) {
  const std::size_t nl = params.layers.size();
  if (cache.layers.size() != nl) throw std::invalid_argument("mlp_backward: cache does not match network");
  if (grad_out.rows != cache.layers.back().post.rows || grad_out.cols != cache.layers.back().post.cols)
    throw std::invalid_argument("mlp_backward: stale cache (gradient shape differs from cached output)");
  MlpGrads g;
  g.dW.resize(nl);
  g.db.resize(nl);
  g.dgamma.resize(nl);
  g.dbeta.resize(nl);
  Matrix dh = grad_out;
  for (std::size_t li = nl; li-- > 0;) {
    const MlpLayer& L = params.layers[li];
    const LayerCache& C = cache.layers[li];
    const std::size_t n = dh.rows, out = L.W.cols;
    if (L.relu)
      for (std::size_t i = 0; i < dh.size(); ++i)
        if (!(C.post.data[i] > 0.0)) dh.data[i] = 0.0;
    Matrix dpre = dh;
    if (L.norm) {
      Vec dxsum(out, 0.0), dxx(out, 0.0);
      Matrix dxhat(n, out);
      if (L.affine) {
        g.dgamma[li].assign(out, 0.0);
        g.dbeta[li].assign(out, 0.0);
      }
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < out; ++c) {
          const double gy = dh(i, c);
          if (L.affine) {
            g.dgamma[li][c] += gy * C.xhat(i, c);
            g.dbeta[li][c] += gy;
          }
          const double dx = L.affine ? gy * L.gamma[c] : gy;
          dxhat(i, c) = dx;
          dxsum[c] += dx;
          dxx[c] += dx * C.xhat(i, c);
        }
      if (cache.mode == Mode::Train) {
        const double invn = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < out; ++c)
            dpre(i, c) = C.inv_std[c] * (dxhat(i, c) - invn * dxsum[c] - C.xhat(i, c) * invn * dxx[c]);
      } else {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < out; ++c) dpre(i, c) = dxhat(i, c) * C.inv_std[c];
      }
    }
    g.dW[li] = matmul_tn(C.input, dpre);
    g.db[li].assign(out, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < out; ++c) g.db[li][c] += dpre(i, c);
    dh = matmul_nt(dpre, L.W);
  }
  g.dX = std::move(dh);
  return g;
}

void sgd_step(MlpParams& params, const MlpGrads& g, SgdState& st) {
  const std::size_t nl = params.layers.size();
  if (st.momentum > 0.0 && st.vW.size() != nl) {
    st.vW.resize(nl);
    st.vb.resize(nl);
    st.vg.resize(nl);
    st.vbeta.resize(nl);
    for (std::size_t l = 0; l < nl; ++l) {
      st.vW[l] = Matrix(params.layers[l].W.rows, params.layers[l].W.cols);
      st.vb[l].assign(params.layers[l].b.size(), 0.0);
      st.vg[l].assign(params.layers[l].gamma.size(), 0.0);
      st.vbeta[l].assign(params.layers[l].beta.size(), 0.0);
    }
  }
  auto update = [&](double* x, const double* gx, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      double step = gx[i];
      if (v) {
        v[i] = st.momentum * v[i] + gx[i];
        step = v[i];
      }
      x[i] -= st.lr * step;
    }
  };
  const bool mom = st.momentum > 0.0;
  for (std::size_t l = 0; l < nl; ++l) {
    MlpLayer& L = params.layers[l];
    update(L.W.data.data(), g.dW[l].data.data(), mom ? st.vW[l].data.data() : nullptr, L.W.size());
    update(L.b.data(), g.db[l].data(), mom ? st.vb[l].data() : nullptr, L.b.size());
    if (L.norm && L.affine) {
      update(L.gamma.data(), g.dgamma[l].data(), mom ? st.vg[l].data() : nullptr, L.gamma.size());
      update(L.beta.data(), g.dbeta[l].data(), mom ? st.vbeta[l].data() : nullptr, L.beta.size());
    }
  }
}

double jacobian_norm_estimate(const MlpParams& params, const Vec& z_probe, int iters, std::uint64_t seed, double fd_step) {
  if (iters < 1) throw std::invalid_argument("jacobian_norm_estimate: iters must be >= 1");
  if (z_probe.size() != params.in_dim()) throw std::invalid_argument("jacobian_norm_estimate: probe dimension mismatch");
  Rng rng(seed);
  const std::size_t d = z_probe.size();
  Matrix x0(1, d);
  std::copy(z_probe.begin(), z_probe.end(), x0.data.begin());
  const Matrix f0 = mlp_forward_const(params, x0, Mode::Eval);
  double acc = 0.0;
  Matrix x1(1, d);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t c = 0; c < d; ++c) x1.data[c] = x0.data[c] + fd_step * rng.normal();
    const Matrix f1 = mlp_forward_const(params, x1, Mode::Eval);
    double s = 0.0;
    for (std::size_t c = 0; c < f0.cols; ++c) {
      const double jv = (f1.data[c] - f0.data[c]) / fd_step;
      s += jv * jv;
    }
    acc += s;
  }
  return std::sqrt(acc / iters);
}

void save_checkpoint(const MlpParams& p, std::ostream& os) {
  os << "ddcl-mlp 1 " << p.layers.size() << ' ' << std::setprecision(17) << p.momentum << ' ' << p.eps << '\n';
  for (const auto& L : p.layers) {
    os << L.W.rows << ' ' << L.W.cols << ' ' << L.norm << ' ' << L.affine << ' ' << L.relu << '\n';
    for (double v : L.W.data) os << v << '\n';
    for (double v : L.b) os << v << '\n';
    if (L.norm) {
      if (L.affine) {
        for (double v : L.gamma) os << v << '\n';
        for (double v : L.beta) os << v << '\n';
      }
      for (double v : L.running_mean) os << v << '\n';
      for (double v : L.running_var) os << v << '\n';
    }
  }
}

MlpParams load_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  std::size_t nl = 0;
  MlpParams p;
  if (!(is >> magic >> version >> nl >> p.momentum >> p.eps) || magic != "ddcl-mlp" || version != 1)
    throw DataError("load_checkpoint: bad header");
  auto read_vec = [&](Vec& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v)
      if (!(is >> x)) throw DataError("load_checkpoint: truncated file");
  };
  for (std::size_t l = 0; l < nl; ++l) {
    MlpLayer L;
    std::size_t r = 0, c = 0;
    if (!(is >> r >> c >> L.norm >> L.affine >> L.relu)) throw DataError("load_checkpoint: bad layer header");
    L.W = Matrix(r, c);
    read_vec(L.W.data, r * c);
    read_vec(L.b, c);
    if (L.norm) {
      if (L.affine) {
        read_vec(L.gamma, c);
        read_vec(L.beta, c);
      }
      read_vec(L.running_mean, c);
      read_vec(L.running_var, c);
    }
    p.layers.push_back(std::move(L));
  }
  return p;
}

}  // namespace ddcl
