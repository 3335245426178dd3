#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "imleplan/errors.hpp"
#include "imleplan/rng.hpp"

namespace imleplan {

// feature-wise affine modulation
inline Eigen::VectorXd film(const Eigen::VectorXd& x, const Eigen::VectorXd& gamma, const Eigen::VectorXd& beta) {
  if (x.size() != gamma.size() || x.size() != beta.size()) throw DimensionError("film: size mismatch");
  return gamma.cwiseProduct(x) + beta;
}

struct FilmMlpDims {
  int input_dim = 0;
  int cond_dim = 0;
  std::vector<int> hidden;
  int film_hidden = 8;
  int output_dim = 0;
};

// Tanh MLP over [input, cond] where every hidden block is modulated by
// gain/shift vectors regressed from cond by two-layer heads:
//   x_k = gamma_k(c) * tanh(W_k x_{k-1} + b_k) + beta_k(c)
//   gamma_k(c) = Q_k tanh(P_k c + p_k) + q_k,  beta_k(c) = S_k tanh(R_k c + r_k) + s_k
// followed by a plain affine head. At init Q, S are zero and q = 1, s = 0, so
// the modulation starts as the identity.
struct FilmMlp {
  FilmMlpDims dims;
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> P;
  std::vector<Eigen::VectorXd> p;
  std::vector<Eigen::MatrixXd> Q;
  std::vector<Eigen::VectorXd> q;
  std::vector<Eigen::MatrixXd> R;
  std::vector<Eigen::VectorXd> r;
  std::vector<Eigen::MatrixXd> S;
  std::vector<Eigen::VectorXd> s;
  Eigen::MatrixXd Wh;
  Eigen::VectorXd bh;

  int blocks() const { return static_cast<int>(dims.hidden.size()); }
};

// every parameter blob in the order used for updates and serialization
inline std::vector<std::pair<double*, std::size_t>> param_blocks(FilmMlp& net) {
  std::vector<std::pair<double*, std::size_t>> out;
  auto add_m = [&](Eigen::MatrixXd& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
  auto add_v = [&](Eigen::VectorXd& v) { out.emplace_back(v.data(), static_cast<std::size_t>(v.size())); };
  for (int k = 0; k < net.blocks(); ++k) {
    add_m(net.W[static_cast<std::size_t>(k)]);
    add_v(net.b[static_cast<std::size_t>(k)]);
    add_m(net.P[static_cast<std::size_t>(k)]);
    add_v(net.p[static_cast<std::size_t>(k)]);
    add_m(net.Q[static_cast<std::size_t>(k)]);
    add_v(net.q[static_cast<std::size_t>(k)]);
    add_m(net.R[static_cast<std::size_t>(k)]);
    add_v(net.r[static_cast<std::size_t>(k)]);
    add_m(net.S[static_cast<std::size_t>(k)]);
    add_v(net.s[static_cast<std::size_t>(k)]);
  }
  add_m(net.Wh);
  add_v(net.bh);
  return out;
}

inline std::size_t param_count(const FilmMlp& net) {
  std::size_t n = 0;
  for (auto& [ptr, len] : param_blocks(const_cast<FilmMlp&>(net))) {
    (void)ptr;
    n += len;
  }
  return n;
}

namespace detail {

inline void fill_fan_in(Eigen::MatrixXd& m, Rng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = static_cast<double>(static_cast<float>(rng.gaussian() * scale));
}

}  // namespace detail

inline FilmMlp init_film_mlp(const FilmMlpDims& dims, Rng& rng) {
  if (dims.input_dim < 1 || dims.output_dim < 1) throw DimensionError("net needs input_dim, output_dim >= 1");
  if (dims.cond_dim < 0 || dims.film_hidden < 1) throw DimensionError("net needs cond_dim >= 0, film_hidden >= 1");
  if (dims.hidden.empty()) throw DimensionError("net needs at least one hidden block");
  for (int h : dims.hidden)
    if (h < 1) throw DimensionError("hidden widths must be >= 1");

  FilmMlp net;
  net.dims = dims;
  int in = dims.input_dim + dims.cond_dim;
  const int cond = std::max(dims.cond_dim, 1);  // keep head shapes valid with no conditioning
  for (int h : dims.hidden) {
    net.W.emplace_back(h, in);
    net.b.emplace_back(Eigen::VectorXd::Zero(h));
    net.P.emplace_back(dims.film_hidden, cond);
    net.p.emplace_back(Eigen::VectorXd::Zero(dims.film_hidden));
    net.Q.emplace_back(Eigen::MatrixXd::Zero(h, dims.film_hidden));
    net.q.emplace_back(Eigen::VectorXd::Ones(h));
    net.R.emplace_back(dims.film_hidden, cond);
    net.r.emplace_back(Eigen::VectorXd::Zero(dims.film_hidden));
    net.S.emplace_back(Eigen::MatrixXd::Zero(h, dims.film_hidden));
    net.s.emplace_back(Eigen::VectorXd::Zero(h));
    in = h;
  }
  net.Wh.resize(dims.output_dim, in);
  net.bh = Eigen::VectorXd::Zero(dims.output_dim);

  for (int k = 0; k < net.blocks(); ++k) {
    detail::fill_fan_in(net.W[static_cast<std::size_t>(k)], rng);
    detail::fill_fan_in(net.P[static_cast<std::size_t>(k)], rng);
    detail::fill_fan_in(net.R[static_cast<std::size_t>(k)], rng);
  }
  detail::fill_fan_in(net.Wh, rng);
  return net;
}

struct FilmMlpTrace {
  Eigen::VectorXd x0;                     // [input, cond]
  Eigen::VectorXd cond;
  std::vector<Eigen::VectorXd> t;         // tanh(W x + b)
  std::vector<Eigen::VectorXd> x;         // block outputs
  std::vector<Eigen::VectorXd> u, v;      // film head hidden activations
  std::vector<Eigen::VectorXd> gamma, beta;
};

inline Eigen::VectorXd film_mlp_forward(const FilmMlp& net, const Eigen::VectorXd& input,
                                        const Eigen::VectorXd& cond, FilmMlpTrace* trace = nullptr) {
  if (input.size() != net.dims.input_dim) throw DimensionError("net forward: input size mismatch");
  if (cond.size() != net.dims.cond_dim) throw DimensionError("net forward: cond size mismatch");
  Eigen::VectorXd x(net.dims.input_dim + net.dims.cond_dim);
  x.head(net.dims.input_dim) = input;
  if (net.dims.cond_dim > 0) x.tail(net.dims.cond_dim) = cond;
  Eigen::VectorXd hc = net.dims.cond_dim > 0 ? cond : Eigen::VectorXd::Zero(1);

  if (trace) {
    trace->x0 = x;
    trace->cond = hc;
    const auto n = static_cast<std::size_t>(net.blocks());
    trace->t.resize(n);
    trace->x.resize(n);
    trace->u.resize(n);
    trace->v.resize(n);
    trace->gamma.resize(n);
    trace->beta.resize(n);
  }

  for (int k = 0; k < net.blocks(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    Eigen::VectorXd t = (net.W[ks] * x + net.b[ks]).array().tanh().matrix();
    Eigen::VectorXd u = (net.P[ks] * hc + net.p[ks]).array().tanh().matrix();
    Eigen::VectorXd v = (net.R[ks] * hc + net.r[ks]).array().tanh().matrix();
    Eigen::VectorXd gamma = net.Q[ks] * u + net.q[ks];
    Eigen::VectorXd beta = net.S[ks] * v + net.s[ks];
    x = film(t, gamma, beta);
    if (trace) {
      trace->t[ks] = std::move(t);
      trace->u[ks] = std::move(u);
      trace->v[ks] = std::move(v);
      trace->gamma[ks] = std::move(gamma);
      trace->beta[ks] = std::move(beta);
      trace->x[ks] = x;
    }
  }
  return net.Wh * x + net.bh;
}

inline FilmMlp zeros_like(const FilmMlp& net) {
  FilmMlp g;
  g.dims = net.dims;
  for (int k = 0; k < net.blocks(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    g.W.push_back(Eigen::MatrixXd::Zero(net.W[ks].rows(), net.W[ks].cols()));
    g.b.push_back(Eigen::VectorXd::Zero(net.b[ks].size()));
    g.P.push_back(Eigen::MatrixXd::Zero(net.P[ks].rows(), net.P[ks].cols()));
    g.p.push_back(Eigen::VectorXd::Zero(net.p[ks].size()));
    g.Q.push_back(Eigen::MatrixXd::Zero(net.Q[ks].rows(), net.Q[ks].cols()));
    g.q.push_back(Eigen::VectorXd::Zero(net.q[ks].size()));
    g.R.push_back(Eigen::MatrixXd::Zero(net.R[ks].rows(), net.R[ks].cols()));
    g.r.push_back(Eigen::VectorXd::Zero(net.r[ks].size()));
    g.S.push_back(Eigen::MatrixXd::Zero(net.S[ks].rows(), net.S[ks].cols()));
    g.s.push_back(Eigen::VectorXd::Zero(net.s[ks].size()));
  }
  g.Wh = Eigen::MatrixXd::Zero(net.Wh.rows(), net.Wh.cols());
  g.bh = Eigen::VectorXd::Zero(net.bh.size());
  return g;
}

// Exact reverse-mode gradients, accumulated into grads. The trace must come
// from a forward call on the same parameters.
inline void film_mlp_backward(const FilmMlp& net, const FilmMlpTrace& trace, const Eigen::VectorXd& d_out,
                              FilmMlp& grads) {
  if (d_out.size() != net.dims.output_dim) throw DimensionError("net backward: upstream size mismatch");
  const int n = net.blocks();
  const Eigen::VectorXd& x_last = n > 0 ? trace.x[static_cast<std::size_t>(n - 1)] : trace.x0;

  grads.Wh.noalias() += d_out * x_last.transpose();
  grads.bh += d_out;
  Eigen::VectorXd dx = net.Wh.transpose() * d_out;

  for (int k = n - 1; k >= 0; --k) {
    const auto ks = static_cast<std::size_t>(k);
    const Eigen::VectorXd& t = trace.t[ks];
    const Eigen::VectorXd& u = trace.u[ks];
    const Eigen::VectorXd& v = trace.v[ks];

    Eigen::VectorXd d_gamma = dx.cwiseProduct(t);
    Eigen::VectorXd d_beta = dx;
    Eigen::VectorXd d_t = dx.cwiseProduct(trace.gamma[ks]);

    grads.Q[ks].noalias() += d_gamma * u.transpose();
    grads.q[ks] += d_gamma;
    Eigen::VectorXd d_u = (net.Q[ks].transpose() * d_gamma).cwiseProduct(
        (1.0 - u.array().square()).matrix());
    grads.P[ks].noalias() += d_u * trace.cond.transpose();
    grads.p[ks] += d_u;

    grads.S[ks].noalias() += d_beta * v.transpose();
    grads.s[ks] += d_beta;
    Eigen::VectorXd d_v = (net.S[ks].transpose() * d_beta).cwiseProduct(
        (1.0 - v.array().square()).matrix());
    grads.R[ks].noalias() += d_v * trace.cond.transpose();
    grads.r[ks] += d_v;

    Eigen::VectorXd d_a = d_t.cwiseProduct((1.0 - t.array().square()).matrix());
    const Eigen::VectorXd& x_prev = k > 0 ? trace.x[static_cast<std::size_t>(k - 1)] : trace.x0;
    grads.W[ks].noalias() += d_a * x_prev.transpose();
    grads.b[ks] += d_a;
    dx = net.W[ks].transpose() * d_a;
  }
}

inline void scale_params(FilmMlp& net, double a) {
  for (auto& [ptr, len] : param_blocks(net))
    for (std::size_t i = 0; i < len; ++i) ptr[i] *= a;
}

inline void axpy_params(FilmMlp& dst, double a, FilmMlp& src) {
  auto d = param_blocks(dst);
  auto s = param_blocks(src);
  for (std::size_t bidx = 0; bidx < d.size(); ++bidx)
    for (std::size_t i = 0; i < d[bidx].second; ++i) d[bidx].first[i] += a * s[bidx].first[i];
}

inline bool params_finite(FilmMlp& net) {
  for (auto& [ptr, len] : param_blocks(net))
    for (std::size_t i = 0; i < len; ++i)
      if (!std::isfinite(ptr[i])) return false;
  return true;
}

// adaptive-moment state for the optional optimizer mode
struct AdamState {
  FilmMlp m, v;
  long step = 0;
};

inline AdamState make_adam_state(const FilmMlp& net) { return {zeros_like(net), zeros_like(net), 0}; }

inline void adam_update(FilmMlp& net, FilmMlp& grads, AdamState& st, double eta, double beta1, double beta2,
                        double eps) {
  ++st.step;
  auto pp = param_blocks(net);
  auto gp = param_blocks(grads);
  auto mp = param_blocks(st.m);
  auto vp = param_blocks(st.v);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  for (std::size_t bidx = 0; bidx < pp.size(); ++bidx)
    for (std::size_t i = 0; i < pp[bidx].second; ++i) {
      const double g = gp[bidx].first[i];
      double& m = mp[bidx].first[i];
      double& v = vp[bidx].first[i];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      pp[bidx].first[i] -= eta * (m / c1) / (std::sqrt(v / c2) + eps);
    }
}

}  // namespace imleplan
