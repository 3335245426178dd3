// end-to-end checks of the command-line binary via a shell
#include <catch2/catch_amalgamated.hpp>
#include <imleplan/imleplan.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace imleplan;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "imleplan-cli-XXXXXX").string();
    char* made = mkdtemp(tmpl.data());
    REQUIRE(made != nullptr);
    path = made;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& err_path = "/dev/null") {
  const std::string cmd = std::string(IMLEPLAN_CLI_PATH) + " " + args + " 2> " + err_path;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(f.good());
  f << text;
}

// drop the wall-clock token so reruns compare equal
std::string strip_timing(const std::string& text) {
  std::string out;
  for (const std::string& line : split(text, '\n')) {
    const std::size_t pos = line.find(" plan_ms=");
    out += pos == std::string::npos ? line : line.substr(0, pos);
    out += '\n';
  }
  return out;
}

std::string tiny_dataset(const TempDir& dir) {
  const std::string ds = dir.file("tiny.ds");
  REQUIRE(run("datagen --kind bimodal --out " + ds + " --n 4 --horizon 5 --dt 0.5 --seed 3") == 0);
  return ds;
}

const char* kTinyImleCfg =
    R"({"latent_dim":2,"hidden":[8],"m":2,"K":2,"L":1,"eta":1e-4,"batch":4,"minibatch":2,"weighting":"none","beta_w":0.5,"seed":1})";

std::string tiny_imle_ckpt(const TempDir& dir, const std::string& ds) {
  const std::string cfg = dir.file("imle.json");
  spit(cfg, kTinyImleCfg);
  const std::string ck = dir.file("imle.ckpt");
  REQUIRE(run("train --model imle --data " + ds + " --config " + cfg + " --out " + ck) == 0);
  return ck;
}

std::string tiny_ddpm_ckpt(const TempDir& dir, const std::string& ds) {
  const std::string cfg = dir.file("ddpm.json");
  spit(cfg, R"({"hidden":[8],"eta":1e-3,"minibatch":2,"seed":3,"steps":10,"T":5})");
  const std::string ck = dir.file("ddpm.ckpt");
  REQUIRE(run("train --model ddpm --data " + ds + " --config " + cfg + " --out " + ck) == 0);
  return ck;
}

}  // namespace

TEST_CASE("datagen writes byte-identical files for a repeated seed") {
  TempDir dir;
  const std::string a = dir.file("a.ds"), b = dir.file("b.ds"), err = dir.file("err.txt");
  REQUIRE(run("datagen --kind bimodal --out " + a + " --n 10 --seed 1", err) == 0);
  REQUIRE(run("datagen --kind bimodal --out " + b + " --n 10 --seed 1") == 0);
  REQUIRE(slurp(a) == slurp(b));
  REQUIRE(slurp(err).find("samples=10") != std::string::npos);
}

TEST_CASE("datagen multiplies samples by the augmentation grid") {
  TempDir dir;
  const std::string out = dir.file("aug.ds");
  REQUIRE(run("datagen --kind bimodal --out " + out +
              " --n 5 --horizon 6 --seed 2 --augment 't=0:0|1:0|0:1|1:1;r=0.1|-0.1'") == 0);
  const Dataset ds = load_dataset(out);
  REQUIRE(ds.samples.size() == 40);  // 5 base x 4 translations x 2 rotations

  // even smoothing windows are rejected downstream of the flag parser
  REQUIRE(run("datagen --kind bimodal --out " + out + " --n 2 --augment w=2") == 2);
}

TEST_CASE("malformed invocations exit with the usage code") {
  TempDir dir;
  REQUIRE(run("datagen --kind bimodal --n 3") == 2);                          // no --out
  REQUIRE(run("plan --scenes 1 --out " + dir.file("x") + " --mode bogus") == 2);  // bad choice
  REQUIRE(run("frobnicate") == 2);                                            // unknown subcommand
}

TEST_CASE("unreadable inputs exit with the io code") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  REQUIRE(run("train --model imle --data " + ds + " --config " + dir.file("absent.json") + " --out " +
              dir.file("ck")) == 1);
  REQUIRE(run("datagen --kind raw --in " + dir.file("absent.txt") + " --out " + dir.file("r.ds")) == 1);
  REQUIRE(run("plan --proposal line --scenes " + dir.file("absent.scenes.json") + " --out " + dir.file("p")) == 1);

  const std::string dup = dir.file("dup.txt"), err = dir.file("err.txt");
  spit(dup, "0 1 0 0\n0 1 1 1\n");
  REQUIRE(run("datagen --kind raw --in " + dup + " --out " + dir.file("r.ds"), err) == 1);
  REQUIRE(slurp(err).find("duplicate frames") != std::string::npos);
}

TEST_CASE("config problems are reported by key name") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  const std::string err = dir.file("err.txt");

  const std::string missing = dir.file("missing.json");
  spit(missing,
       R"({"latent_dim":2,"hidden":[8],"m":2,"K":2,"L":1,"batch":4,"minibatch":2,"weighting":"none","beta_w":0.5,"seed":1})");
  REQUIRE(run("train --model imle --data " + ds + " --config " + missing + " --out " + dir.file("ck"), err) == 2);
  REQUIRE(slurp(err).find("missing config key: eta") != std::string::npos);

  const std::string extra = dir.file("extra.json");
  spit(extra, std::string(kTinyImleCfg).insert(1, "\"etaa\":1,"));
  REQUIRE(run("train --model imle --data " + ds + " --config " + extra + " --out " + dir.file("ck"), err) == 2);
  REQUIRE(slurp(err).find("unknown config key: etaa") != std::string::npos);

  REQUIRE(run("datagen --kind raw --out " + dir.file("r.ds"), err) == 2);  // raw without --in
  REQUIRE(slurp(err).find("--in") != std::string::npos);
}

TEST_CASE("a small training run writes a checkpoint that loads back") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  const std::string cfg = dir.file("imle.json"), ck = dir.file("imle.ckpt"), err = dir.file("err.txt");
  spit(cfg, kTinyImleCfg);
  REQUIRE(run("train --model imle --data " + ds + " --config " + cfg + " --out " + ck, err) == 0);
  REQUIRE(slurp(err).find("mean_selected_loss=") != std::string::npos);

  GeneratorParams params = load_checkpoint(ck);
  REQUIRE(params.dims.horizon == 5);
  REQUIRE(params.dims.dt == 0.5);
  REQUIRE(params.dims.latent_dim == 2);
  REQUIRE(params_finite(params.net));
}

TEST_CASE("an absurd learning rate reports divergence") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  const std::string cfg = dir.file("hot.json"), err = dir.file("err.txt");
  spit(cfg,
       R"({"latent_dim":2,"hidden":[8],"m":2,"K":3,"L":2,"eta":1e12,"batch":4,"minibatch":2,"weighting":"none","beta_w":0.5,"seed":1})");
  REQUIRE(run("train --model imle --data " + ds + " --config " + cfg + " --out " + dir.file("ck"), err) == 3);
  REQUIRE(slurp(err).find("non-finite") != std::string::npos);
}

TEST_CASE("exponential weighting matches unweighted training when returns are flat") {
  TempDir dir;
  const std::string trace = dir.file("trace.txt");
  std::string rows;
  for (int f = 0; f < 8; ++f) {
    rows += std::to_string(f) + " 1 " + format_double(0.4 * f) + " 0\n";
    rows += std::to_string(f) + " 2 0 " + format_double(0.4 * f) + "\n";
  }
  spit(trace, rows);

  const std::string ds = dir.file("raw.ds");
  REQUIRE(run("datagen --kind raw --in " + trace + " --out " + ds + " --horizon 4 --dt 0.4") == 0);
  const Dataset loaded = load_dataset(ds);
  REQUIRE(loaded.samples.size() == 6);  // 3 windows per agent
  for (const WeightedSample& s : loaded.samples) REQUIRE(s.return_value == 0.0);  // no obstacles, flat returns

  const auto train_with = [&](const char* weighting, const std::string& ck) {
    const std::string cfg = dir.file(std::string("w-") + weighting + ".json");
    spit(cfg, std::string(R"({"latent_dim":1,"hidden":[6],"m":2,"K":3,"L":1,"eta":1e-4,"batch":6,"minibatch":3,"weighting":")") +
                  weighting + R"(","beta_w":0.5,"seed":5})");
    REQUIRE(run("train --model imle --data " + ds + " --config " + cfg + " --out " + ck) == 0);
  };
  const std::string ck_exp = dir.file("exp.ckpt"), ck_none = dir.file("none.ckpt");
  train_with("exp", ck_exp);
  train_with("none", ck_none);
  REQUIRE(slurp(ck_exp) == slurp(ck_none));
}

TEST_CASE("a denoiser training run stores its noise schedule") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  const std::string ck = tiny_ddpm_ckpt(dir, ds);
  auto [params, sched] = load_ddpm_checkpoint(ck);
  REQUIRE(sched.steps == 5);
  REQUIRE(sched.beta.front() == 1e-4);
  REQUIRE(sched.beta.back() == 2e-2);
  REQUIRE(params.dims.horizon == 5);
  REQUIRE(params_finite(params.net));
}

TEST_CASE("planning twice with one seed reproduces everything but wall-clock time") {
  TempDir dir;
  const std::string scenes = dir.file("scenes.json");
  spit(scenes, R"({"scenes":[
    {"robot_start":[0,0],"goal":[3,0],"duration":12},
    {"robot_start":[0,1],"goal":[3,1],"duration":12}
  ]})");
  const std::string flags = " --proposal line --mode mppi --scenes " + scenes +
                            " --horizon 5 --dt 0.5 --candidates 4 --perturbations 4 --sigma 0.05 --seed 9 --out ";
  const std::string a = dir.file("outA"), b = dir.file("outB");
  REQUIRE(run("plan" + flags + a) == 0);
  REQUIRE(run("plan" + flags + b) == 0);

  REQUIRE(slurp(a + "/metrics.csv") == slurp(b + "/metrics.csv"));
  for (const char* name : {"/episode_0.log", "/episode_1.log"})
    REQUIRE(strip_timing(slurp(a + name)) == strip_timing(slurp(b + name)));

  // empty scenes with a straight-line proposal: no collisions, goals reached
  const auto lines = split(slurp(a + "/metrics.csv"), '\n');
  REQUIRE(lines[0] == metrics_csv_header());
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (!lines[i].empty()) REQUIRE(split(lines[i], ',')[1] == "0");
  REQUIRE(slurp(a + "/episode_0.log").find("\"reached_goal\":true") != std::string::npos);
}

TEST_CASE("shape clashes between checkpoint, flags, and scenes exit with the dimension code") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  const std::string ck = tiny_imle_ckpt(dir, ds);
  REQUIRE(run("plan --proposal imle --ckpt " + ck + " --scenes 1 --horizon 9 --out " + dir.file("p1")) == 4);
  REQUIRE(run("plan --proposal imle --ckpt " + ck + " --scenes 1 --dt 0.9 --out " + dir.file("p2")) == 4);

  const std::string scenes = dir.file("slow.json");
  spit(scenes, R"([{"robot_start":[0,0],"goal":[2,0],"duration":5,"dt":0.3}])");
  REQUIRE(run("plan --proposal line --scenes " + scenes + " --dt 0.4 --out " + dir.file("p3")) == 4);
}

TEST_CASE("bench rejects thin trial counts and writes one row per planner") {
  TempDir dir;
  const std::string ds = tiny_dataset(dir);
  const std::string ck_imle = tiny_imle_ckpt(dir, ds);
  const std::string ck_ddpm = tiny_ddpm_ckpt(dir, ds);
  const std::string csv = dir.file("bench.csv");

  REQUIRE(run("bench --ckpt-imle " + ck_imle + " --ckpt-ddpm " + ck_ddpm + " --batch 2 --trials 5 --out " + csv) ==
          2);

  REQUIRE(run("bench --ckpt-imle " + ck_imle + " --ckpt-ddpm " + ck_ddpm + " --batch 2 --trials 10 --out " + csv) ==
          0);
  const auto lines = split(slurp(csv), '\n');
  REQUIRE(lines.size() >= 3);
  REQUIRE(lines[0] == bench_csv_header());
  REQUIRE(lines[1].rfind("imle,2,", 0) == 0);
  REQUIRE(lines[2].rfind("ddpm,2,", 0) == 0);
}
