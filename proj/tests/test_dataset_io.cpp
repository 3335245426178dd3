#include <catch2/catch_amalgamated.hpp>
#include <imleplan/dataset_io.hpp>
#include <imleplan/rng.hpp>

#include <sstream>

using namespace imleplan;

namespace {

Dataset fuzzy_dataset(int n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  for (int i = 0; i < n; ++i) {
    WeightedSample s;
    s.trajectory = make_trajectory(5, 2, 1, 0.4);
    for (double& v : s.trajectory.values) v = rng.gaussian() * 3.7;
    s.context.current_state = {rng.gaussian(), rng.gaussian()};
    s.context.goal = {rng.uniform_in(-9, 9), rng.uniform_in(-9, 9)};
    s.context.obstacle_count = 2;
    s.context.history_len = 3;
    s.context.obstacle_history.resize(12);
    for (double& v : s.context.obstacle_history) v = rng.gaussian();
    s.return_value = rng.gaussian() * 0.1;
    s.weight = rng.uniform_pos();
    add_sample(ds, std::move(s));
  }
  return ds;
}

std::string dump(const Dataset& ds) {
  std::ostringstream os;
  save_dataset(ds, os);
  return os.str();
}

}  // namespace

TEST_CASE("save then load reproduces every bit") {
  const Dataset ds = fuzzy_dataset(7, 404);
  std::istringstream is(dump(ds));
  const Dataset back = load_dataset(is, "mem");

  REQUIRE(back.horizon == ds.horizon);
  REQUIRE(back.dt == ds.dt);
  REQUIRE(back.state_dim == ds.state_dim);
  REQUIRE(back.action_dim == ds.action_dim);
  REQUIRE(back.goal_dim == ds.goal_dim);
  REQUIRE(back.obstacle_count == ds.obstacle_count);
  REQUIRE(back.history_len == ds.history_len);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const WeightedSample& a = ds.samples[i];
    const WeightedSample& b = back.samples[i];
    REQUIRE(a.return_value == b.return_value);
    REQUIRE(a.weight == b.weight);
    REQUIRE(a.trajectory.values == b.trajectory.values);
    REQUIRE(a.context.current_state == b.context.current_state);
    REQUIRE(a.context.goal == b.context.goal);
    REQUIRE(a.context.obstacle_history == b.context.obstacle_history);
  }

  // and a second save of the loaded copy is byte identical
  REQUIRE(dump(back) == dump(ds));
}

TEST_CASE("header carries all seven shape fields") {
  const Dataset ds = fuzzy_dataset(1, 1);
  const std::string text = dump(ds);
  const std::string header = text.substr(0, text.find('\n'));
  REQUIRE(header.rfind("IMLE-DS v1 H=5 dt=", 0) == 0);
  REQUIRE(header.find(" Ds=2 ") != std::string::npos);
  REQUIRE(header.find(" Da=1 ") != std::string::npos);
  REQUIRE(header.find(" N=1 ") != std::string::npos);
  REQUIRE(header.find(" Dg=2 ") != std::string::npos);
  REQUIRE(header.find(" O=2 ") != std::string::npos);
  REQUIRE(header.find(" P=3") != std::string::npos);
}

TEST_CASE("metadata is not serialized") {
  Dataset ds = fuzzy_dataset(2, 9);
  const std::string before = dump(ds);
  ds.metadata["note"] = "whatever";
  REQUIRE(dump(ds) == before);
  std::istringstream is(before);
  REQUIRE(load_dataset(is, "mem").metadata.empty());
}

TEST_CASE("empty dataset round trips") {
  Dataset ds;
  ds.horizon = 4;
  ds.state_dim = 2;
  ds.action_dim = 0;
  ds.goal_dim = 2;
  ds.dt = 0.5;
  std::istringstream is(dump(ds));
  const Dataset back = load_dataset(is, "mem");
  REQUIRE(back.samples.empty());
  REQUIRE(back.horizon == 4);
}

TEST_CASE("load rejects wrong magic") {
  std::istringstream is("IMLE-XX v1 H=4 dt=0.5 Ds=2 Da=0 N=0 Dg=2 O=0 P=0\n");
  REQUIRE_THROWS_WITH(load_dataset(is, "mem"), Catch::Matchers::ContainsSubstring("not an IMLE-DS v1 file"));
  std::istringstream v2("IMLE-DS v2 H=4 dt=0.5 Ds=2 Da=0 N=0 Dg=2 O=0 P=0\n");
  REQUIRE_THROWS_AS(load_dataset(v2, "mem"), IoError);
  std::istringstream empty("");
  REQUIRE_THROWS_WITH(load_dataset(empty, "mem"), Catch::Matchers::ContainsSubstring("empty dataset file"));
}

TEST_CASE("load rejects malformed headers") {
  std::istringstream bad_kv("IMLE-DS v1 H=4 dt=0.5 Ds=2 Da=0 N=0 Dg=2 O=0 Q=0\n");
  REQUIRE_THROWS_AS(load_dataset(bad_kv, "mem"), IoError);
  std::istringstream bad_num("IMLE-DS v1 H=four dt=0.5 Ds=2 Da=0 N=0 Dg=2 O=0 P=0\n");
  REQUIRE_THROWS_AS(load_dataset(bad_num, "mem"), IoError);
  std::istringstream neg("IMLE-DS v1 H=4 dt=-0.5 Ds=2 Da=0 N=0 Dg=2 O=0 P=0\n");
  REQUIRE_THROWS_WITH(load_dataset(neg, "mem"), Catch::Matchers::ContainsSubstring("out of range"));
  std::istringstream short_hdr("IMLE-DS v1 H=4 dt=0.5 Ds=2 Da=0 N=0 Dg=2\n");
  REQUIRE_THROWS_WITH(load_dataset(short_hdr, "mem"),
                      Catch::Matchers::ContainsSubstring("missing context shape tokens"));
}

TEST_CASE("record errors carry the line number") {
  const Dataset ds = fuzzy_dataset(3, 5);
  std::string text = dump(ds);

  SECTION("truncated file") {
    const std::size_t last = text.rfind("R=");
    std::istringstream is(text.substr(0, last));
    REQUIRE_THROWS_WITH(load_dataset(is, "mem"),
                        Catch::Matchers::ContainsSubstring("truncated file, expected 3 records, got 2"));
  }

  SECTION("wrong context count on record 2, reported as line 3") {
    // drop one float from the second record's C= list
    std::size_t rec2 = text.find('\n') + 1;
    rec2 = text.find('\n', rec2) + 1;
    const std::size_t c_pos = text.find("C=", rec2);
    const std::size_t comma = text.find(',', c_pos);
    text.erase(c_pos + 2, comma - (c_pos + 2) + 1);
    std::istringstream is(text);
    REQUIRE_THROWS_WITH(load_dataset(is, "mem"), Catch::Matchers::ContainsSubstring("mem:3: expected 16 context floats, got 15"));
  }

  SECTION("garbage float names the record line") {
    const std::size_t t_pos = text.find("T=");
    text.replace(t_pos + 2, 1, "x");
    std::istringstream is(text);
    REQUIRE_THROWS_WITH(load_dataset(is, "mem"), Catch::Matchers::ContainsSubstring("mem:2"));
  }

  SECTION("missing field") {
    const std::size_t w_pos = text.find("W=");
    const std::size_t sp = text.find(' ', w_pos);
    text.erase(w_pos, sp - w_pos + 1);
    std::istringstream is(text);
    REQUIRE_THROWS_WITH(load_dataset(is, "mem"), Catch::Matchers::ContainsSubstring("expected 4 fields"));
  }
}

TEST_CASE("file helpers raise IoError on unreadable paths") {
  REQUIRE_THROWS_AS(load_dataset("/nonexistent/dir/ds.txt"), IoError);
  const Dataset ds = fuzzy_dataset(1, 2);
  REQUIRE_THROWS_AS(save_dataset(ds, "/nonexistent/dir/ds.txt"), IoError);
}
