#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = -1;
  std::string out;  // stdout only
};

class Workdir {
 public:
  Workdir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("fdi-cli-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~Workdir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

  Run run(const std::string& args) const {
    const std::string cmd = "cd '" + path_.string() + "' && '" FDI_CLI_PATH "' --log-level error " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf;
    while (std::fgets(buf.data(), buf.size(), p)) r.out += buf.data();
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

void write_text(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("synth is deterministic and writes a sidecar") {
  Workdir w;
  REQUIRE(w.run("synth --equation burgers1d --out a.fdi").code == 0);
  REQUIRE(w.run("synth --equation burgers1d --out b.fdi").code == 0);
  CHECK(slurp(w / "a.fdi") == slurp(w / "b.fdi"));
  CHECK(slurp(w / "a.fdi").substr(0, 4) == "FDI1");
  const auto side = read_json(w / "a.json");
  CHECK(side["equation"]["name"] == "burgers1d");
  CHECK(side["noise"].is_null());
}

TEST_CASE("zero noise leaves the samples untouched and records provenance") {
  Workdir w;
  REQUIRE(w.run("synth --equation burgers1d --out c.fdi").code == 0);
  REQUIRE(w.run("noise --in c.fdi --out n.fdi --alpha 0 --seed 4").code == 0);
  CHECK(slurp(w / "c.fdi") == slurp(w / "n.fdi"));
  const auto side = read_json(w / "n.json");
  CHECK(side["noise"]["alpha"] == 0.0);
  CHECK(side["noise"]["seed"] == 4);
  CHECK(side["equation"]["name"] == "burgers1d");
}

TEST_CASE("identify prints the equation and writes the result") {
  Workdir w;
  REQUIRE(w.run("synth --equation burgers1d --out b.fdi").code == 0);
  const auto r = w.run("identify --in b.fdi --out r.json");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("u_t = -1.0000*u*u_x + 0.0500*u_xx\n", 0) == 0);
  const auto res = read_json(w / "r.json");
  CHECK(res["equation_string"] == "u_t = -1.0000*u*u_x + 0.0500*u_xx");
  CHECK(res["config"]["diff"]["method"] == "fd");
}

TEST_CASE("noisy bundles pick the noisy defaults from the sidecar") {
  Workdir w;
  REQUIRE(w.run("synth --equation burgers1d --out b.fdi").code == 0);
  REQUIRE(w.run("noise --in b.fdi --out n.fdi --alpha 0.1 --seed 3").code == 0);
  REQUIRE(w.run("identify --in n.fdi --out r.json").code == 0);
  CHECK(read_json(w / "r.json")["config"]["diff"]["method"] == "poly");
  REQUIRE(w.run("identify --in n.fdi --out r2.json --noisy false").code == 0);
  CHECK(read_json(w / "r2.json")["config"]["diff"]["method"] == "fd");
}

TEST_CASE("flags override the config file") {
  Workdir w;
  REQUIRE(w.run("synth --equation burgers1d --out b.fdi").code == 0);
  write_text(w / "cfg.json", R"({"selector":"stlm","cutoff":[10,4]})");
  REQUIRE(w.run("identify --in b.fdi --config cfg.json --out a.json").code == 0);
  const auto a = read_json(w / "a.json");
  CHECK(a["method"] == "stlm");
  CHECK(a["config"]["cutoff"] == json::array({10, 4}));
  REQUIRE(w.run("identify --in b.fdi --config cfg.json --method csr --out b.json").code == 0);
  const auto b = read_json(w / "b.json");
  CHECK(b["method"] == "csr");
  CHECK(b["config"]["cutoff"] == json::array({10, 4}));
}

TEST_CASE("exit codes") {
  Workdir w;
  CHECK(w.run("identify").code == 1);
  CHECK(w.run("identify --in missing.fdi").code == 1);
  CHECK(w.run("synth --equation heat7d --out x.fdi").code == 1);
  CHECK(w.run("frobnicate").code == 1);
  write_text(w / "junk.fdi", "XDI1 not a bundle");
  CHECK(w.run("identify --in junk.fdi").code == 1);
  REQUIRE(w.run("synth --equation burgers1d --out b.fdi").code == 0);
  CHECK(w.run("identify --in b.fdi --cutoff 400,4").code == 1);
  write_text(w / "coarse.json", R"({"lower":[-4,-4,0],"extent":[8,8,4],"points":[64,64,16],"substeps":1})");
  CHECK(w.run("synth --equation wave2d --grid coarse.json --out w.fdi").code == 2);
}

TEST_CASE("benchmarks write CSV and JSON") {
  Workdir w;
  const auto r = w.run("csr-vs-stlm --equation burgers1d --alphas 0 --trials 1 --csv s.csv --out s.json");
  REQUIRE(r.code == 0);
  CHECK(slurp(w / "s.csv").rfind("alpha,trials,csr_correct,stlm_correct\n0,1,1,1", 0) == 0);
  CHECK(read_json(w / "s.json")["options"]["trials"] == 1);
  REQUIRE(w.run("sweep --equation burgers1d --alphas 0:0.1:0.1 --trials 1 --out sw.json").code == 0);
  CHECK(read_json(w / "sw.json")["alphas"] == json::array({0.0, 0.1}));
}
