#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "networld/data/trajectory.hpp"
#include "networld/util/csv.hpp"
#include "networld/util/kv.hpp"

#ifndef NETWORLD_CLI_PATH
#error "NETWORLD_CLI_PATH must point at the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(NETWORLD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

// Same, but with an environment assignment in front of the binary.
int run_env(const std::string& env, const std::string& args) {
  const std::string cmd =
      env + " " + std::string(NETWORLD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "networld_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tiny_dataset(const fs::path& dir, const std::string& task, int seed) {
  const std::string out = (dir / ("ds_" + task)).string();
  REQUIRE(run("gen-data --task " + task + " --out " + out +
              " --episodes 3 --agents 3 --steps 8 --seed " + std::to_string(seed)) == 0);
  return out;
}

const char* kTinyModel =
    " --epochs 1 --steps-per-epoch 4 --batch 8 --latent 4 --horizon 6 --unet-base 8"
    " --clf-base 8 --groups 4 --diffusion-steps 30 --return-bins 17";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generated datasets round-trip through the binary") {
  const fs::path dir = fresh_dir("gen");
  const std::string out = tiny_dataset(dir, "rb", 5);

  const auto store = networld::data::TrajectoryStore::load(out);
  CHECK(store.num_episodes == 3);
  CHECK(store.spec.task == networld::envs::TaskId::kScheduling);
  CHECK(store.spec.num_agents == 3);
  CHECK(store.spec.episode_len == 8);
  store.validate();

  const auto manifest = networld::util::KvDoc::load(out + "/manifest.txt");
  CHECK(manifest.get_string("run.command") == "gen-data");
  CHECK(manifest.get_uint("run.seed") == 5);
  CHECK(manifest.get_string("run.policy") == "expert");
  CHECK(!manifest.get_string("run.version").empty());
  CHECK(!manifest.get_string("run.timestamp").empty());
  // The dataset's own layout keys survive the appended run record.
  CHECK(manifest.get_string("format") == "networld-dataset-v1");
}

TEST_CASE("usage errors exit with status two and help exits clean") {
  CHECK(run("--help") == 0);
  CHECK(run("gen-data --help") == 0);
  CHECK(run("gen-data --task cbf --out /tmp/x --bogus-flag 1") == 2);
  CHECK(run("gen-data --task cbf") == 2);  // --out is required
  CHECK(run("no-such-command") == 2);
  CHECK(run("") == 2);  // a subcommand is required

  // Runtime failures (bad inputs, not bad usage) exit with one.
  CHECK(run("eval --task cbf --out /tmp/networld_cli_tests/x --policy planner") == 1);
  CHECK(run("pretrain --data /nonexistent --out /tmp/networld_cli_tests/y") == 1);
  CHECK(run("gen-data --task worse --out /tmp/networld_cli_tests/z") == 1);
}

TEST_CASE("flags beat the config file and the environment seed fills in last") {
  const fs::path dir = fresh_dir("precedence");
  {
    std::ofstream cfg(dir / "gen.cfg");
    cfg << "episodes = 2\nseed = 11\n";
  }
  const std::string base = "gen-data --task ns --agents 3 --steps 6 --config " +
                           (dir / "gen.cfg").string() + " --out ";

  REQUIRE(run(base + (dir / "a").string()) == 0);
  auto m = networld::util::KvDoc::load((dir / "a" / "manifest.txt").string());
  CHECK(m.get_int("run.episodes") == 2);  // from the config file
  CHECK(m.get_uint("run.seed") == 11);

  REQUIRE(run(base + (dir / "b").string() + " --episodes 4 --seed 7") == 0);
  m = networld::util::KvDoc::load((dir / "b" / "manifest.txt").string());
  CHECK(m.get_int("run.episodes") == 4);  // flags win
  CHECK(m.get_uint("run.seed") == 7);

  REQUIRE(run_env("NETWORLD_SEED=42",
                  "gen-data --task ns --agents 3 --steps 6 --out " + (dir / "c").string()) == 0);
  m = networld::util::KvDoc::load((dir / "c" / "manifest.txt").string());
  CHECK(m.get_uint("run.seed") == 42);  // env fills the gap

  REQUIRE(run_env("NETWORLD_SEED=42", base + (dir / "d").string()) == 0);
  m = networld::util::KvDoc::load((dir / "d" / "manifest.txt").string());
  CHECK(m.get_uint("run.seed") == 11);  // but the config file still outranks it
}

TEST_CASE("identical commands leave byte-identical artifacts") {
  const fs::path dir = fresh_dir("determinism");
  const std::string ds = tiny_dataset(dir, "cbf", 3);

  const std::string train = "pretrain --data " + ds + kTinyModel + " --seed 9 --out ";
  REQUIRE(run(train + (dir / "run_a").string()) == 0);
  REQUIRE(run(train + (dir / "run_b").string()) == 0);
  CHECK(slurp(dir / "run_a" / "loss.csv") == slurp(dir / "run_b" / "loss.csv"));
  CHECK(slurp(dir / "run_a" / "model.ckpt") == slurp(dir / "run_b" / "model.ckpt"));

  const std::string eval = "eval --task cbf --policy planner --model " +
                           (dir / "run_a" / "model.ckpt").string() +
                           " --seeds 1,2 --steps 6 --replan 2 --seed 4 --out ";
  REQUIRE(run(eval + (dir / "eval_a").string()) == 0);
  REQUIRE(run(eval + (dir / "eval_b").string()) == 0);
  const std::string metrics = slurp(dir / "eval_a" / "metrics.csv");
  CHECK(metrics == slurp(dir / "eval_b" / "metrics.csv"));
  CHECK(metrics.find("ms") == std::string::npos);  // no wall-clock columns

  // The finetune path restores the checkpoint and trains the target task.
  const std::string ft = "finetune --model " + (dir / "run_a" / "model.ckpt").string() +
                         " --data " + ds + " --task cbf --epochs 1 --steps-per-epoch 2" +
                         " --batch 8 --seed 2 --out " + (dir / "ft").string();
  REQUIRE(run(ft) == 0);
  CHECK(fs::exists(dir / "ft" / "model.ckpt"));
  CHECK(fs::exists(dir / "ft" / "loss.csv"));
}

TEST_CASE("eval writes one metrics row per seed and episode") {
  const fs::path dir = fresh_dir("eval_rows");
  REQUIRE(run("eval --task rb --policy expert --agents 3 --steps 6 --seeds 1,2"
              " --episodes-per-seed 2 --out " +
              (dir / "ev").string()) == 0);

  const auto rows = networld::util::read_csv((dir / "ev" / "metrics.csv").string());
  REQUIRE(rows.size() == 5);
  const std::vector<std::string> header = {"task",    "policy",      "seed",
                                           "episode", "mean_reward", "fallbacks"};
  CHECK(rows[0] == header);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][0] == "rb");
    CHECK(rows[i][1] == "expert");
    CHECK(rows[i][5] == "0");  // scripted policies never fall back
    CHECK(std::isfinite(std::stod(rows[i][4])));
  }
  CHECK(rows[1][2] == "1");
  CHECK(rows[2][2] == "1");
  CHECK(rows[3][2] == "2");
  CHECK(rows[1][3] == "0");
  CHECK(rows[2][3] == "1");

  const auto manifest = networld::util::KvDoc::load((dir / "ev" / "manifest.txt").string());
  CHECK(manifest.get_string("run.command") == "eval");
  CHECK(manifest.get_string("run.seeds") == "1,2");
}

TEST_CASE("plot renders both summary images from plain csv files") {
  const fs::path dir = fresh_dir("plot");
  {
    std::ofstream loss(dir / "loss.csv");
    loss << "step,phase,task,total\n1,pretrain,cbf,4.0\n2,pretrain,cbf,3.5\n3,pretrain,cbf,3.1\n";
    std::ofstream metrics(dir / "metrics.csv");
    metrics << "task,policy,seed,episode,mean_reward,fallbacks\n"
               "cbf,expert,1,0,2.5,0\ncbf,expert,2,0,3.5,0\n";
  }
  REQUIRE(run("plot --loss " + (dir / "loss.csv").string() + " --metrics " +
              (dir / "metrics.csv").string() + " --out " + (dir / "img").string()) == 0);

  for (const char* name : {"curves.png", "ratio.png"}) {
    const std::string png = slurp(dir / "img" / name);
    REQUIRE(png.size() > 8);
    CHECK(static_cast<unsigned char>(png[0]) == 0x89);
    CHECK(png.substr(1, 3) == "PNG");
  }

  // A metrics file without the expected column is a runtime error.
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "a,b\n1,2\n";
  }
  CHECK(run("plot --metrics " + (dir / "bad.csv").string() + " --out " +
            (dir / "img2").string()) == 1);
}

}  // TEST_SUITE
