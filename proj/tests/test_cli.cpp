#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "asyncnet/functional.hpp"
#include "asyncnet/netfile.hpp"
#include "support.hpp"

#ifndef ASYNCNET_CLI
#define ASYNCNET_CLI "asyncnet"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("asyncnet_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  fs::path err = scratch() / "stderr.txt";
  std::string cmd = std::string(ASYNCNET_CLI) + " " + args + " 2>" + err.string();
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read(err);
  return r;
}

std::string fx(const char* name) { return testing::fixture(name); }

fs::path write_temp(const std::string& name, const std::string& text) {
  fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("factorize prints both layerings") {
  Run r = run("factorize " + fx("figure3.net"));
  CHECK(r.code == 0);
  CHECK(r.out ==
        "left: P^h ◇ (P^e ⊔ P^g) ◇ (P^d ⊔ P^f) ◇ P^b ◇ (P^a ⊔ P^c)\n"
        "right: (P^g ⊔ P^h) ◇ (P^c ⊔ P^e ⊔ P^f) ◇ P^d ◇ P^b ◇ P^a\n"
        "layers: 5\n");

  Run j = run("factorize " + fx("figure3.net") + " --side left --out json");
  REQUIRE(j.code == 0);
  json doc = json::parse(j.out);
  CHECK(doc["left"]["layers"].size() == 5);
  CHECK(doc["left"]["problems"].empty());
  CHECK(doc.find("right") == doc.end());

  CHECK(run("factorize " + fx("single_event.net")).out == "left: P^meet\nright: P^meet\nlayers: 1\n");
}

TEST_CASE("exit codes") {
  Run cyc = run("factorize " + fx("cyclic.net"));
  CHECK(cyc.code == 4);
  CHECK(cyc.err.find("cyclic precedence: x -> y -> x") != std::string::npos);

  Run mismatch = run("verify " + fx("railway_stage1.net") + " --second " + fx("railway_stage2_mismatch.net"));
  CHECK(mismatch.code == 3);
  CHECK(mismatch.err.find("boundary mismatch") != std::string::npos);

  CHECK(run("simulate " + (scratch() / "missing.net").string()).code == 3);
  CHECK(run("simulate " + fx("railway.net") + " --step -1").code == 3);
  CHECK(run("simulate " + fx("railway.net") + " --no-such-flag").code == 3);
  CHECK(run("--help").code == 0);

  // x' = +-1 across x = 0 chatters without a dwell time
  fs::path slide = write_temp("slide.net", R"(asyncnet v1
nodes
  A: x in [-1, 1]
structures
  up:
  down:
fields
  up: x' = 1
  down: x' = -1
events
  when x < 0 use up
  default down
)");
  Run chat = run("simulate " + slide.string() + " --x0 'x=-0.5' --duration 2 --t-max 5");
  CHECK(chat.code == 2);
  CHECK(run("simulate " + slide.string() + " --x0 'x=-0.5' --duration 2 --t-max 5 --min-dwell 0.1").code == 0);

  Run tight = run("verify " + fx("figure3.net") + " --samples 3 --tolerance 0 --out json");
  json doc = json::parse(tight.out);
  CHECK(tight.code == (doc["pass"].get<bool>() ? 0 : 5));
}

TEST_CASE("simulate writes a CSV trajectory") {
  Run r = run("simulate " + fx("railway.net") + " --x0 'x1=-1, th1=1, x2=1, th2=0' --duration 3");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# asyncnet v1 simulate");
  std::getline(in, line);
  CHECK(line == "t,structure,x1,th1,x2,th2");
  std::size_t rows = 0;
  bool coupled = false;
  double last_t = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ++rows;
    coupled |= line.find(",beta,") != std::string::npos;
    double t = std::stod(line.substr(0, line.find(',')));
    CHECK(t >= last_t);
    last_t = t;
  }
  CHECK(rows > 3000);
  CHECK(coupled);
  CHECK(last_t == 3.0);

  Run zero = run("simulate " + fx("railway.net") + " --duration 0");
  CHECK(zero.code == 0);
  std::size_t data = 0;
  std::istringstream z(zero.out);
  while (std::getline(z, line))
    if (!line.empty() && line[0] != '#' && line[0] != 't') ++data;
  CHECK(data == 1);

  Run dead = run("simulate " + fx("railway.net") + " --x0 'x1=-1, th1=pi, x2=1, th2=0' --t-max 100 --stride 1000");
  CHECK(dead.code == 0);
  CHECK(dead.out.find("# deadlock") != std::string::npos);
}

TEST_CASE("transition agrees with the library") {
  Run r = run("transition " + fx("railway.net") + " --x0 'x1=-1, th1=1, x2=1, th2=0'");
  REQUIRE(r.code == 0);
  json doc = json::parse(r.out);
  REQUIRE(doc["samples"].size() == 1);
  const json& s = doc["samples"][0];
  CHECK(s["status"] == "completed");

  asyncnet::LoadedNetwork ln = asyncnet::load_file(fx("railway.net"));
  asyncnet::TransitionResult lib = asyncnet::run_transition(
      *ln.functional, asyncnet::make_state(ln.functional->space(), {-1, 1, 1, 0}), asyncnet::IntegratorConfig{});
  CHECK(s["times"][0].get<double>() == lib.times[0]);
  CHECK(s["times"][1].get<double>() == lib.times[1]);
  CHECK(std::fabs(lib.times[0] - testing::railway_time(1.0)) <= 1e-6);

  Run grid = run("transition " + fx("railway.net") + " --grid th1=0:6.283185307179586:8 --t-max 100");
  REQUIRE(grid.code == 0);
  json g = json::parse(grid.out);
  CHECK(g["summary"]["sampled"] == 8);
  CHECK(g["summary"]["deadlocked"] == 1);
  CHECK(g["deadlocked"] == json::array({4}));
  CHECK(g["samples"][4]["times"][0].is_null());

  Run late = run("transition " + fx("railway.net") + " --x0 'x1=-1, th1=0, x2=1, th2=0' --start-times '0,0.5'");
  json l = json::parse(late.out);
  double oracle = 2.5 + 0.5 * std::log(std::tan(0.25) / std::tan(0.05));
  CHECK(std::fabs(l["samples"][0]["times"][1].get<double>() - oracle) <= 1e-6);
}

TEST_CASE("outputs are deterministic across runs and thread counts") {
  std::string base = "transition " + fx("railway.net") + " --grid th1=0:6.28:1 --grid th2=0:6.28:1 --random 12 --seed 4 --t-max 50";
  Run a = run(base + " --threads 1"), b = run(base + " --threads 3"), c = run(base + " --threads 1");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);

  Run csv = run(base + " --out csv");
  CHECK(csv.out.rfind("# asyncnet v1 transition\nindex,x1,th1,x2,th2,status,S_T1,S_T2,", 0) == 0);

  fs::path out = scratch() / "verify.json";
  Run v = run("verify " + fx("trivial.net") + " --samples 5 -o " + out.string());
  CHECK(v.code == 0);
  json doc = json::parse(read(out));
  CHECK(doc["pass"] == true);
  CHECK(doc["checks"].contains("left_vs_right"));
  CHECK(run("verify " + fx("trivial.net") + " --samples 5").out == run("verify " + fx("trivial.net") + " --samples 5").out);
}
