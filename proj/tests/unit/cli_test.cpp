#include <gtest/gtest.h>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>

#include "foresit/cli/commands.hpp"
#include "foresit/cli/config_file.hpp"
#include "foresit/cli/manifest.hpp"
#include "foresit/cli/model_io.hpp"
#include "foresit/error.hpp"

extern char** environ;

using namespace foresit;
using namespace foresit::cli;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSmallConfig = R"(# small run
[env]
max_steps = 15
train_layouts = 1
val_layouts = 1
test_layouts = 1

[agent]
hidden = 8
value_hidden = 4

[train]
mode = baseline
episodes = 30
seed = 1
)";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("foresit_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write(dir_ / "small.ini", kSmallConfig);
    unsetenv("FORESIT_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }

  static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }
  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "foresit");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    testing::internal::CaptureStderr();
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    err_ = testing::internal::GetCapturedStderr();
    return code;
  }

  fs::path train(const std::string& name, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"train", "--config", (dir_ / "small.ini").string(), "--out", (dir_ / name).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    EXPECT_EQ(run(args), kExitOk) << err_;
    return dir_ / name;
  }

  fs::path dir_;
  std::string err_;
};

nlohmann::json manifest_of(const fs::path& run) {
  return nlohmann::json::parse(std::ifstream(run / "manifest.json"));
}

}  // namespace

TEST(ConfigFile, ParseSerializeRoundTrip) {
  auto loaded = parse_config_text(kSmallConfig);
  EXPECT_EQ(loaded.config.hidden, 8u);
  EXPECT_EQ(loaded.config.mode, trainer::Mode::Baseline);
  EXPECT_TRUE(loaded.provided.count("train.seed"));
  loaded.config.lr = 1.0 / 3.0;
  const auto text = serialize_config(loaded.config);
  const auto back = parse_config_text(text);
  EXPECT_TRUE(back.config == loaded.config);
  EXPECT_EQ(serialize_config(back.config), text);
}

TEST(ConfigFile, ErrorsNameTheField) {
  try {
    parse_config_text("[train]\ngamma = lots\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "train.gamma");
  }
  EXPECT_THROW(parse_config_text("[agent]\nwidth = 3\n"), ConfigError);
  auto cfg = parse_config_text("");
  EXPECT_THROW(apply_override(cfg, "no-equals-sign"), ConfigError);
  apply_override(cfg, "train.seed=9");
  EXPECT_EQ(cfg.config.seed, 9u);
  try {
    require_fields(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "train.mode");
  }
}

TEST(Manifest, BlobHashMatchesGit) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_F(CliTest, MissingRequiredFieldExitsTwoNamingIt) {
  write(dir_ / "partial.ini", "[train]\nmode = baseline\nseed = 1\n");
  EXPECT_EQ(run({"train", "--config", (dir_ / "partial.ini").string(), "--out", (dir_ / "r").string()}), kExitConfig);
  EXPECT_NE(err_.find("train.episodes"), std::string::npos) << err_;
  EXPECT_EQ(run({"train", "--config", (dir_ / "small.ini").string(), "--set", "train.gamma=2"}), kExitConfig);
  EXPECT_NE(err_.find("train.gamma"), std::string::npos) << err_;
  EXPECT_EQ(run({"train", "--bogus-flag"}), kExitConfig);
}

TEST_F(CliTest, TrainTwiceGivesIdenticalMetrics) {
  const auto a = train("a");
  const auto b = train("b");
  EXPECT_FALSE(read(a / "metrics.jsonl").empty());
  EXPECT_EQ(read(a / "metrics.jsonl"), read(b / "metrics.jsonl"));
  EXPECT_TRUE(fs::exists(a / "ckpt" / "final" / "agent.bin"));
  const auto m = manifest_of(a);
  EXPECT_EQ(m["episodes_done"], 30);
  EXPECT_EQ(m["interrupted"], false);
  EXPECT_EQ(m["config"]["train"]["gamma"], "0.99");
}

TEST_F(CliTest, ModeFlagChangesOnlyTheModeField) {
  const auto f = train("f", {"--mode", "foresit"});
  const auto r = train("r", {"--mode", "rnd"});
  const auto mf = manifest_of(f), mr = manifest_of(r);
  const auto diff = nlohmann::json::diff(mf["config"], mr["config"]);
  ASSERT_EQ(diff.size(), 1u) << diff.dump();
  EXPECT_EQ(diff[0]["path"], "/train/mode");
  EXPECT_EQ(mf["seed"], mr["seed"]);
}

TEST_F(CliTest, SeedEnvironmentOverridesConfigButNotFlags) {
  setenv("FORESIT_SEED", "7", 1);
  EXPECT_EQ(manifest_of(train("env"))["seed"], 7);
  EXPECT_EQ(manifest_of(train("flag", {"--seed", "8"}))["seed"], 8);
  unsetenv("FORESIT_SEED");
}

TEST_F(CliTest, EvalFreshModelAndReportFiles) {
  const auto run_dir = train("e", {"--episodes", "1"});
  const auto model = run_dir / "ckpt" / "final";
  ASSERT_EQ(run({"eval", "--model", model.string(), "--split", "val", "--seeds", "2"}), kExitOk) << err_;
  ASSERT_EQ(run({"eval", "--model", model.string(), "--split", "val", "--seeds", "2", "--greedy", "--csv",
                 (dir_ / "rows.csv").string()}),
            kExitOk)
      << err_;
  const auto sampled = nlohmann::json::parse(std::ifstream(run_dir / "eval" / "report-val-sampled.json"));
  const auto greedy = nlohmann::json::parse(std::ifstream(run_dir / "eval" / "report-val-greedy.json"));
  for (const auto& rep : {sampled, greedy}) {
    EXPECT_GE(rep["overall"]["SR"].get<double>(), 0.0);
    EXPECT_LE(rep["overall"]["SR"].get<double>(), 1.0);
  }
  EXPECT_EQ(greedy["options"]["greedy"], true);
  EXPECT_TRUE(fs::exists(dir_ / "rows.csv"));
}

TEST_F(CliTest, TruncatedCheckpointExitsThreeWithOffset) {
  const auto model = train("t", {"--episodes", "1"}) / "ckpt" / "final";
  const auto bin = model / "agent.bin";
  const auto size = fs::file_size(bin);
  fs::resize_file(bin, size / 2);
  EXPECT_EQ(run({"eval", "--model", model.string(), "--split", "val"}), kExitCorrupt);
  EXPECT_NE(err_.find("offset"), std::string::npos) << err_;
  EXPECT_EQ(run({"eval", "--model", (dir_ / "nowhere").string()}), kExitRuntime);
}

TEST_F(CliTest, AblateTableHasOneRowPerMode) {
  const auto out = dir_ / "abl";
  ASSERT_EQ(run({"ablate", "--config", (dir_ / "small.ini").string(), "--modes", "baseline,rnd", "--seeds", "1,2",
                 "--set", "train.episodes=5", "--out", out.string()}),
            kExitOk)
      << err_;
  const auto j = nlohmann::json::parse(std::ifstream(out / "ablation.json"));
  ASSERT_EQ(j["rows"].size(), 2u);
  for (const auto& row : j["rows"]) {
    EXPECT_EQ(row["complete_cells"], 2);
    EXPECT_EQ(row["cells"].size(), 2u);
  }
}

TEST_F(CliTest, AblateFailedCellIsMarkedIncomplete) {
  const auto out = dir_ / "abl";
  fs::create_directories(out);
  write(out / "rnd-seed1", "a file where the cell's run directory should go");
  ASSERT_EQ(run({"ablate", "--config", (dir_ / "small.ini").string(), "--modes", "baseline,rnd", "--seeds", "1",
                 "--set", "train.episodes=3", "--out", out.string()}),
            kExitOk)
      << err_;
  const auto j = nlohmann::json::parse(std::ifstream(out / "ablation.json"));
  ASSERT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["rows"][0]["complete_cells"], 1);
  EXPECT_EQ(j["rows"][1]["incomplete_cells"], 1);
  EXPECT_TRUE(j["rows"][1]["SR_mean"].is_null());
  EXPECT_NE(read(out / "ablation.txt").find("incomplete"), std::string::npos);
  EXPECT_EQ(run({"ablate", "--config", (dir_ / "small.ini").string(), "--modes", "imaginary"}), kExitConfig);
}

TEST_F(CliTest, DumpLayoutsThenTrainFromThem) {
  ASSERT_EQ(run({"dump-layouts", "--config", (dir_ / "small.ini").string(), "--out", (dir_ / "layouts").string()}),
            kExitOk)
      << err_;
  const auto a = train("from-dir", {"--layouts", (dir_ / "layouts").string()});
  const auto b = train("generated");
  EXPECT_EQ(read(a / "metrics.jsonl"), read(b / "metrics.jsonl"));
}

TEST_F(CliTest, ExportStatesWritesOneLinePerStep) {
  const auto model = train("x", {"--mode", "foresit", "--episodes", "2"}) / "ckpt" / "final";
  const auto out = dir_ / "states.jsonl";
  ASSERT_EQ(run({"export-states", "--model", model.string(), "--split", "test", "--out", out.string()}), kExitOk)
      << err_;
  std::ifstream in(out);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["state"].size(), 8u);
    ++lines;
  }
  EXPECT_GT(lines, 0u);
}

#ifdef FORESIT_BINARY
namespace {

pid_t spawn(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
  const int rc = posix_spawn(&pid, FORESIT_BINARY, &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  return rc == 0 ? pid : -1;
}

bool wait_for_lines(const fs::path& file, std::size_t lines, std::chrono::seconds limit) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    std::ifstream in(file);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    if (n >= lines) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return false;
}

int exit_status(pid_t pid) {
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_F(CliTest, InterruptedTrainingWritesFinalCheckpoint) {
  const auto run_dir = dir_ / "sig";
  const pid_t pid = spawn({FORESIT_BINARY, "train", "--config", (dir_ / "small.ini").string(), "--episodes",
                           "100000000", "--out", run_dir.string()});
  ASSERT_GT(pid, 0);
  ASSERT_TRUE(wait_for_lines(run_dir / "metrics.jsonl", 5, std::chrono::seconds(60)));
  kill(pid, SIGINT);
  EXPECT_EQ(exit_status(pid), kExitOk);
  const auto m = manifest_of(run_dir);
  EXPECT_EQ(m["interrupted"], true);
  EXPECT_GE(m["episodes_done"].get<int>(), 5);
  EXPECT_EQ(load_model(run_dir / "ckpt" / "final").episodes, m["episodes_done"].get<std::uint64_t>());
}

TEST_F(CliTest, InterruptedAblationCellIsMarkedIncomplete) {
  const auto out = dir_ / "abl";
  const pid_t pid = spawn({FORESIT_BINARY, "ablate", "--config", (dir_ / "small.ini").string(), "--modes",
                           "baseline", "--seeds", "1,2", "--set", "train.episodes=100000000", "--out", out.string()});
  ASSERT_GT(pid, 0);
  ASSERT_TRUE(wait_for_lines(out / "baseline-seed1" / "metrics.jsonl", 5, std::chrono::seconds(60)));
  kill(pid, SIGINT);
  EXPECT_EQ(exit_status(pid), kExitOk);
  const auto j = nlohmann::json::parse(std::ifstream(out / "ablation.json"));
  ASSERT_EQ(j["rows"].size(), 1u);
  EXPECT_EQ(j["rows"][0]["incomplete_cells"], 2);
  EXPECT_EQ(j["rows"][0]["cells"][0]["note"], "interrupted");
  EXPECT_TRUE(j["rows"][0]["SR_mean"].is_null());
}
#endif
