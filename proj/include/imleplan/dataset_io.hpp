#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "imleplan/errors.hpp"
#include "imleplan/serialize_util.hpp"
#include "imleplan/trajectory.hpp"

namespace imleplan {

// Text dataset format, one sample per record line:
//   IMLE-DS v1 H=<int> dt=<float> Ds=<int> Da=<int> N=<int> Dg=<int> O=<int> P=<int>
//   R=<return> W=<weight> C=<ctx floats, comma sep> T=<traj floats, comma sep>
// Floats are written with 17 significant digits so a save/load round trip is exact.

inline void save_dataset(const Dataset& ds, std::ostream& os) {
  validate_dataset(ds);
  os << "IMLE-DS v1 H=" << ds.horizon << " dt=" << format_double(ds.dt) << " Ds=" << ds.state_dim
     << " Da=" << ds.action_dim << " N=" << ds.samples.size() << " Dg=" << ds.goal_dim << " O=" << ds.obstacle_count
     << " P=" << ds.history_len << "\n";
  for (const WeightedSample& s : ds.samples) {
    os << "R=" << format_double(s.return_value) << " W=" << format_double(s.weight) << " C=";
    bool first = true;
    for (double v : s.context.current_state) {
      os << (first ? "" : ",") << format_double(v);
      first = false;
    }
    for (double v : s.context.goal) os << "," << format_double(v);
    for (double v : s.context.obstacle_history) os << "," << format_double(v);
    os << " T=";
    first = true;
    for (double v : s.trajectory.values) {
      os << (first ? "" : ",") << format_double(v);
      first = false;
    }
    os << "\n";
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  save_dataset(ds, f);
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

inline Dataset load_dataset(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw IoError(name + ": empty dataset file");
  auto toks = split_ws(line);
  if (toks.size() < 8 || toks[0] != "IMLE-DS" || toks[1] != "v1")
    throw IoError(name + ": not an IMLE-DS v1 file");
  Dataset ds;
  ds.horizon = static_cast<int>(parse_long(expect_kv(toks[2], "H", name), name));
  ds.dt = parse_double(expect_kv(toks[3], "dt", name), name);
  ds.state_dim = static_cast<int>(parse_long(expect_kv(toks[4], "Ds", name), name));
  ds.action_dim = static_cast<int>(parse_long(expect_kv(toks[5], "Da", name), name));
  const long n = parse_long(expect_kv(toks[6], "N", name), name);
  if (toks.size() < 10) throw IoError(name + ": header is missing context shape tokens");
  ds.goal_dim = static_cast<int>(parse_long(expect_kv(toks[7], "Dg", name), name));
  ds.obstacle_count = static_cast<int>(parse_long(expect_kv(toks[8], "O", name), name));
  ds.history_len = static_cast<int>(parse_long(expect_kv(toks[9], "P", name), name));
  if (ds.horizon < 2 || ds.state_dim < 1 || ds.action_dim < 0 || n < 0 || ds.goal_dim < 0 ||
      ds.obstacle_count < 0 || ds.history_len < 0 || !(ds.dt > 0.0))
    throw IoError(name + ": header dims are out of range");

  const std::size_t ctx_count = static_cast<std::size_t>(ds.state_dim) + static_cast<std::size_t>(ds.goal_dim) +
                                static_cast<std::size_t>(ds.obstacle_count) * static_cast<std::size_t>(ds.history_len) * 2;
  const std::size_t traj_count =
      static_cast<std::size_t>(ds.horizon) * static_cast<std::size_t>(ds.state_dim + ds.action_dim);

  long line_no = 1;
  for (long i = 0; i < n; ++i) {
    if (!std::getline(is, line)) throw IoError(name + ": truncated file, expected " + std::to_string(n) +
                                               " records, got " + std::to_string(i));
    ++line_no;
    const std::string where = name + ":" + std::to_string(line_no);
    auto rec = split_ws(line);
    if (rec.size() != 4) throw IoError(where + ": expected 4 fields R= W= C= T=");
    WeightedSample s;
    s.return_value = parse_double(expect_kv(rec[0], "R", where), where);
    s.weight = parse_double(expect_kv(rec[1], "W", where), where);

    auto ctx_toks = split(expect_kv(rec[2], "C", where), ',');
    if (ctx_toks.size() != ctx_count)
      throw IoError(where + ": expected " + std::to_string(ctx_count) + " context floats, got " +
                    std::to_string(ctx_toks.size()));
    std::size_t k = 0;
    s.context.current_state.resize(static_cast<std::size_t>(ds.state_dim));
    for (double& v : s.context.current_state) v = parse_double(ctx_toks[k++], where);
    s.context.goal.resize(static_cast<std::size_t>(ds.goal_dim));
    for (double& v : s.context.goal) v = parse_double(ctx_toks[k++], where);
    s.context.obstacle_count = ds.obstacle_count;
    s.context.history_len = ds.history_len;
    s.context.obstacle_history.resize(ctx_count - k);
    for (double& v : s.context.obstacle_history) v = parse_double(ctx_toks[k++], where);

    auto traj_toks = split(expect_kv(rec[3], "T", where), ',');
    if (traj_toks.size() != traj_count)
      throw IoError(where + ": expected " + std::to_string(traj_count) + " trajectory floats, got " +
                    std::to_string(traj_toks.size()));
    s.trajectory.horizon = ds.horizon;
    s.trajectory.state_dim = ds.state_dim;
    s.trajectory.action_dim = ds.action_dim;
    s.trajectory.dt = ds.dt;
    s.trajectory.values.resize(traj_count);
    for (std::size_t j = 0; j < traj_count; ++j) s.trajectory.values[j] = parse_double(traj_toks[j], where);

    ds.samples.push_back(std::move(s));
  }
  validate_dataset(ds);
  return ds;
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return load_dataset(f, path);
}

}  // namespace imleplan
