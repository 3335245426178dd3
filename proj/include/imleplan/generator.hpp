#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "imleplan/film_mlp.hpp"
#include "imleplan/serialize_util.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

struct GeneratorDims {
  int latent_dim = 16;
  int state_dim = 2;
  int action_dim = 0;
  int goal_dim = 2;
  int obstacle_count = 1;
  int history_len = 1;
  int horizon = 20;
  double dt = 0.4;
  double scale = 5.0;  // context/output normalization scale, meters
  std::vector<int> hidden = {64, 64};
  int film_hidden = 16;

  int context_dim() const { return state_dim + goal_dim + obstacle_count * history_len * 2; }
  int out_channels() const { return state_dim + action_dim; }
  int output_dim() const { return horizon * out_channels(); }
};

struct GeneratorParams {
  GeneratorDims dims;
  FilmMlp net;
};

inline void validate_generator_dims(const GeneratorDims& d) {
  if (d.latent_dim < 1) throw DimensionError("generator needs latent_dim >= 1");
  if (d.state_dim < 1 || d.action_dim < 0 || d.goal_dim < 0) throw DimensionError("generator dims out of range");
  if (d.obstacle_count < 0 || d.history_len < 0) throw DimensionError("generator obstacle dims out of range");
  if (d.horizon < 2) throw DimensionError("generator needs horizon >= 2");
  if (!(d.dt > 0.0) || !(d.scale > 0.0)) throw DimensionError("generator needs dt > 0 and scale > 0");
}

inline GeneratorParams init_generator(const GeneratorDims& dims, Rng& rng) {
  validate_generator_dims(dims);
  FilmMlpDims nd;
  nd.input_dim = dims.latent_dim;
  nd.cond_dim = dims.context_dim();
  nd.hidden = dims.hidden;
  nd.film_hidden = dims.film_hidden;
  nd.output_dim = dims.output_dim();
  return {dims, init_film_mlp(nd, rng)};
}

// Positions are expressed relative to the current state and divided by scale,
// so translated scenes produce the same conditioning vector.
inline Eigen::VectorXd normalize_context(const Context& c, const GeneratorDims& dims) {
  if (c.state_dim() != dims.state_dim || c.goal_dim() != dims.goal_dim ||
      c.obstacle_count != dims.obstacle_count || c.history_len != dims.history_len)
    throw DimensionError("context dims do not match generator");
  const double csx = c.current_state[0];
  const double csy = dims.state_dim > 1 ? c.current_state[1] : 0.0;
  Eigen::VectorXd out(dims.context_dim());
  int k = 0;
  for (int d = 0; d < dims.state_dim; ++d)
    out[k++] = d < 2 ? 0.0 : c.current_state[static_cast<std::size_t>(d)] / dims.scale;
  for (int d = 0; d < dims.goal_dim; ++d) {
    const double ref = d == 0 ? csx : (d == 1 ? csy : 0.0);
    out[k++] = (c.goal[static_cast<std::size_t>(d)] - ref) / dims.scale;
  }
  for (std::size_t j = 0; j + 1 < c.obstacle_history.size(); j += 2) {
    out[k++] = (c.obstacle_history[j] - csx) / dims.scale;
    out[k++] = (c.obstacle_history[j + 1] - csy) / dims.scale;
  }
  return out;
}

// Single-shot trajectory sample: one net evaluation per latent code. The head
// output lives in the normalized frame; it is de-normalized around the current
// state, and the first state is then overwritten exactly (hard conditioning).
inline Trajectory generator_forward(const GeneratorParams& params, const Eigen::VectorXd& z, const Context& c,
                                    FilmMlpTrace* trace = nullptr) {
  const GeneratorDims& d = params.dims;
  if (z.size() != d.latent_dim) throw DimensionError("latent size does not match generator");
  const Eigen::VectorXd cond = normalize_context(c, d);
  const Eigen::VectorXd raw = film_mlp_forward(params.net, z, cond, trace);

  Trajectory out = make_trajectory(d.horizon, d.state_dim, d.action_dim, d.dt);
  const int ch = d.out_channels();
  for (int t = 0; t < d.horizon; ++t)
    for (int j = 0; j < ch; ++j) {
      const double anchor = j < d.state_dim ? c.current_state[static_cast<std::size_t>(j)] : 0.0;
      out.at(t, j) = anchor + d.scale * raw[t * ch + j];
    }
  for (int j = 0; j < d.state_dim; ++j) out.at(0, j) = c.current_state[static_cast<std::size_t>(j)];
  return out;
}

// Gradients w.r.t. every net parameter given an upstream gradient in
// trajectory layout. The overwritten first state contributes nothing.
inline void generator_backward(const GeneratorParams& params, const FilmMlpTrace& trace,
                               const std::vector<double>& upstream, FilmMlp& grads) {
  const GeneratorDims& d = params.dims;
  if (static_cast<int>(upstream.size()) != d.output_dim())
    throw DimensionError("upstream gradient size does not match generator output");
  Eigen::VectorXd d_raw(d.output_dim());
  for (int i = 0; i < d.output_dim(); ++i) d_raw[i] = d.scale * upstream[static_cast<std::size_t>(i)];
  for (int j = 0; j < d.state_dim; ++j) d_raw[j] = 0.0;  // first state is pinned
  film_mlp_backward(params.net, trace, d_raw, grads);
}

// ---- checkpoints ----
// Text header with every dimension, then the parameters as little-endian
// 32-bit floats in declaration order.

namespace detail {

inline std::string dims_header_tokens(const GeneratorDims& d) {
  std::ostringstream os;
  os << "latent=" << d.latent_dim << " state=" << d.state_dim << " action=" << d.action_dim
     << " goal=" << d.goal_dim << " obstacles=" << d.obstacle_count << " history=" << d.history_len
     << " horizon=" << d.horizon << " dt=" << format_double(d.dt) << " scale=" << format_double(d.scale)
     << " film=" << d.film_hidden << " hidden=";
  for (std::size_t i = 0; i < d.hidden.size(); ++i) os << (i ? "," : "") << d.hidden[i];
  return os.str();
}

inline GeneratorDims parse_dims_tokens(const std::vector<std::string>& toks, std::size_t at,
                                       const std::string& where) {
  if (toks.size() < at + 11) throw IoError(where + ": checkpoint header is missing tokens");
  GeneratorDims d;
  d.latent_dim = static_cast<int>(parse_long(expect_kv(toks[at + 0], "latent", where), where));
  d.state_dim = static_cast<int>(parse_long(expect_kv(toks[at + 1], "state", where), where));
  d.action_dim = static_cast<int>(parse_long(expect_kv(toks[at + 2], "action", where), where));
  d.goal_dim = static_cast<int>(parse_long(expect_kv(toks[at + 3], "goal", where), where));
  d.obstacle_count = static_cast<int>(parse_long(expect_kv(toks[at + 4], "obstacles", where), where));
  d.history_len = static_cast<int>(parse_long(expect_kv(toks[at + 5], "history", where), where));
  d.horizon = static_cast<int>(parse_long(expect_kv(toks[at + 6], "horizon", where), where));
  d.dt = parse_double(expect_kv(toks[at + 7], "dt", where), where);
  d.scale = parse_double(expect_kv(toks[at + 8], "scale", where), where);
  d.film_hidden = static_cast<int>(parse_long(expect_kv(toks[at + 9], "film", where), where));
  d.hidden.clear();
  for (const std::string& h : split(expect_kv(toks[at + 10], "hidden", where), ','))
    d.hidden.push_back(static_cast<int>(parse_long(h, where)));
  return d;
}

inline void write_payload(std::ostream& os, FilmMlp& net) {
  for (auto& [ptr, len] : param_blocks(net))
    for (std::size_t i = 0; i < len; ++i) write_f32_le(os, static_cast<float>(ptr[i]));
}

inline void read_payload(std::istream& is, FilmMlp& net, const std::string& where) {
  for (auto& [ptr, len] : param_blocks(net))
    for (std::size_t i = 0; i < len; ++i) ptr[i] = static_cast<double>(read_f32_le(is, where));
  char extra;
  if (is.read(&extra, 1) || is.gcount() != 0) throw IoError(where + ": trailing bytes after parameter payload");
}

}  // namespace detail

inline void save_checkpoint(const GeneratorParams& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "IMLE-CKPT v1 " << detail::dims_header_tokens(params.dims) << "\n";
  detail::write_payload(f, const_cast<FilmMlp&>(params.net));
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline GeneratorParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  if (!std::getline(f, header)) throw IoError(path + ": empty checkpoint");
  auto toks = split_ws(header);
  if (toks.size() < 2 || toks[0] != "IMLE-CKPT" || toks[1] != "v1")
    throw IoError(path + ": not an IMLE-CKPT v1 file");
  GeneratorDims dims = detail::parse_dims_tokens(toks, 2, path);
  validate_generator_dims(dims);
  Rng scratch(0);
  GeneratorParams params = init_generator(dims, scratch);
  detail::read_payload(f, params.net, path);
  return params;
}

}  // namespace imleplan
