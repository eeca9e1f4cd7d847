#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = CRLOC_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// Output files carry one timestamp comment; everything else must be stable.
std::string strip_timestamp(std::string text) {
  const auto pos = text.find("# timestamp:");
  if (pos == std::string::npos) return text;
  const auto end = text.find('\n', pos);
  text.erase(pos, end - pos + 1);
  return text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth reruns with one seed are bitwise identical") {
  TempDir a("crloc_cli_synth_a"), b("crloc_cli_synth_b");
  REQUIRE(run("synth --stage 2 --n 5 --seed 7 --preset desk --out " + a.path.string()) == 0);
  REQUIRE(run("synth --stage 2 --n 5 --seed 7 --preset desk --out " + b.path.string()) == 0);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a.path)) {
    const auto other = b.path / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(strip_timestamp(slurp(entry.path())) == strip_timestamp(slurp(other)));
    ++files;
  }
  CHECK(files == 6);  // 5 images + manifest
}

TEST_CASE("unknown flags exit with code 2 and produce no output") {
  TempDir t("crloc_cli_unknown");
  const auto out = t.path / "never.csv";
  CHECK(run("eval-oracle --frobnicate --out " + out.string()) == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(run("no-such-subcommand") == 2);
}

TEST_CASE("missing files exit with code 3") {
  CHECK(run("model-info --model /nonexistent/model.crcnn") == 3);
  CHECK(run("synth --config /nonexistent/config.json") == 3);
  CHECK(run("pipeline --frames /nonexistent/frames --out /tmp/x.csv") == 3);
}

TEST_CASE("unknown config keys are rejected with their path") {
  TempDir t("crloc_cli_badcfg");
  const auto cfg = t.path / "cfg.json";
  std::ofstream(cfg) << R"({"synth": {"bogus_key": 1}})";
  CHECK(run("synth --config " + cfg.string() + " --out " + (t.path / "d").string()) == 2);
  std::ofstream(cfg) << R"({"not_a_section": {}})";
  CHECK(run("synth --config " + cfg.string()) == 2);
  std::ofstream(cfg) << R"(not json at all)";
  CHECK(run("synth --config " + cfg.string()) == 2);
}

TEST_CASE("config supplies defaults, flags take precedence") {
  TempDir t("crloc_cli_cfgprec");
  const auto cfg = t.path / "cfg.json";
  const auto outdir = t.path / "data";
  std::ofstream(cfg) << R"({"seed": 5, "synth": {"n": 3, "stage": 2, "preset": "desk", "out": ")"
                     << outdir.string() << R"("}})";
  REQUIRE(run("synth --config " + cfg.string() + " --n 2") == 0);
  int images = 0;
  for (const auto& entry : fs::directory_iterator(outdir))
    if (entry.path().extension() == ".pgm") ++images;
  CHECK(images == 2);  // flag --n 2 overrode config n 3
}

TEST_CASE("eval-oracle writes the benchmark table with an audit header") {
  TempDir t("crloc_cli_oracle");
  const auto out = t.path / "oracle.csv";
  REQUIRE(run("eval-oracle --image-size 64 --seed 3 --out " + out.string()) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("# crloc ") != std::string::npos);
  CHECK(text.find("# config_hash: ") != std::string::npos);
  CHECK(text.find("# seed: 3") != std::string::npos);
  CHECK(text.find("r,A,sigma_n,E,I,method,mean_abs_err,max_abs_err,bias,fail_count") !=
        std::string::npos);
  // 9 radii x 5 amplitudes plus headers.
  int rows = 0;
  std::ifstream is(out);
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#' && line.find("oracle_com") != std::string::npos) ++rows;
  CHECK(rows == 45);
}

TEST_CASE("eval-oracle reruns are byte-identical modulo the timestamp") {
  TempDir t("crloc_cli_oracle_det");
  const auto out1 = t.path / "o1.csv";
  const auto out2 = t.path / "o2.csv";
  REQUIRE(run("eval-oracle --image-size 64 --seed 3 --jobs 1 --out " + out1.string()) == 0);
  REQUIRE(run("eval-oracle --image-size 64 --seed 3 --jobs 1 --out " + out2.string()) == 0);
  CHECK(strip_timestamp(slurp(out1)) == strip_timestamp(slurp(out2)));
}

TEST_CASE("model-info prints the layer spec of a trained file") {
  TempDir t("crloc_cli_model");
  const auto model = t.path / "m.crcnn";
  // Smallest possible training run just to produce a model file.
  REQUIRE(run("train --preset desk --epochs 1 --samples-per-epoch 8 --val-size 4 --out " +
              model.string()) == 0);
  const std::string cmd = kCli + " model-info --model " + model.string() + " > " +
                          (t.path / "info.txt").string() + " 2>/dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string info = slurp(t.path / "info.txt");
  CHECK(info.find("input 64 64") != std::string::npos);
  CHECK(info.find("conv 8 3") != std::string::npos);
  CHECK(info.find("parameters") != std::string::npos);
}

}  // TEST_SUITE
