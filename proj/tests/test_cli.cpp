#include "catch_amalgamated.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int exit_code;
  std::string out;
  std::string err;
};

fs::path workdir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "chebydyn_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli(const std::string& args, const std::string& env = "") {
  fs::path err = workdir() / "stderr.txt";
  std::string cmd = "cd " + workdir().string() + " && " + env + " " + CHEBYDYN_CLI + " " + args + " 2>" + err.string();
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  int status = pclose(pipe);
  return Result{WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err)};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("cli map") {
  auto r = cli("map --N 2 --a 0 --x0 0 --steps 2");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "n,x\n0,0\n1,-1\n2,1\n");

  auto v = cli("map --N 3 --a -pi/9 --verify-conjugation");
  REQUIRE(v.exit_code == 0);
  CHECK(std::stod(lines(v.out).at(1).substr(lines(v.out).at(1).rfind(',') + 1)) < 1e-10);

  auto bad = cli("map --N 1 --a 0");
  CHECK(bad.exit_code == 2);
  CHECK(bad.err.find("N must be ≥ 2") != std::string::npos);
  CHECK(cli("map --N 2 --a 0.5").exit_code == 2);
  CHECK(cli("map --N 2 --x0 1.5").exit_code == 2);
  CHECK(cli("map --N 2 --bogus").exit_code == 2);
}

TEST_CASE("cli density") {
  auto r = cli("density --N 3 --a -pi/9 --exact");
  REQUIRE(r.exit_code == 0);
  json j = json::parse(r.out);
  std::vector<std::string> plateaus;
  for (const auto& p : j["plateaus"]) plateaus.push_back(p["value"]);
  CHECK(plateaus == std::vector<std::string>{"19/118", "19/177", "21/236", "11/118", "19/236", "14/177", "7/118"});
  CHECK(j["values"][0] == "19/11");
  CHECK(j["points"].size() == 11);

  auto canonical = json::parse(cli("density --N 3 --a -pi/9 --exact --orientation canonical").out);
  CHECK(canonical["plateaus"][0]["value"] == "7/118");

  auto flat = json::parse(cli("density --N 2 --a 0 --exact").out);
  for (const auto& v : flat["values"]) CHECK(v == "1/1");

  auto h = cli("density --N 3 --a -pi/2 --histogram --traj 20 --steps 200 --burn 10 --bins 50 --seed 7");
  REQUIRE(h.exit_code == 0);
  auto rows = lines(h.out);
  CHECK(rows.front() == "bin_center,density");
  CHECK(rows.size() == 51);

  CHECK(cli("density --N 3 --a -0.3 --exact").exit_code == 2);
  CHECK(cli("density --N 3 --a 0 --exact --histogram").exit_code == 2);
}

TEST_CASE("cli spectrum") {
  auto r = cli("spectrum --N 3 --n-max 3");
  REQUIRE(r.exit_code == 0);
  auto rows = lines(r.out);
  REQUIRE(rows.size() == 8);
  std::map<std::string, int> multiplicity;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::stringstream s(rows[i]);
    std::string n, branch, lambda, degree, residual;
    std::getline(s, n, ',');
    std::getline(s, branch, ',');
    std::getline(s, lambda, ',');
    std::getline(s, degree, ',');
    std::getline(s, residual, ',');
    ++multiplicity[lambda];
    CHECK(std::stod(residual) < 1e-9);
  }
  CHECK(multiplicity == std::map<std::string, int>{{"1/1", 1}, {"1/9", 2}, {"1/81", 2}, {"1/729", 2}});

  CHECK(lines(cli("spectrum --N 4 --n-max 0").out).size() == 2);
  auto semi = lines(cli("spectrum --semi-conj even --q 1 --m 2").out);
  CHECK(std::stod(semi.at(1).substr(semi.at(1).rfind(',') + 1)) < 1e-9);
  auto descriptors = json::parse(cli("spectrum --N 2 --n-max 1 --format json").out);
  CHECK(descriptors[1]["lambda"] == "1/4");
}

TEST_CASE("cli corr") {
  auto r = cli("corr --N 2 --a 0 --tuple 1,0,0 --samples 100000 --seed 1");
  REQUIRE(r.exit_code == 0);
  auto row = lines(r.out).at(1);
  CHECK(row.rfind("1 0 0,0.25,", 0) == 0);
  CHECK(row.substr(row.rfind(',') + 1) == "2");

  CHECK(lines(cli("corr --twopoint-nary --N 2 --k 4").out).at(1).find(",1/192,") != std::string::npos);
  CHECK(lines(cli("corr --count --support chebyshev --N 3 --r 3 --n-max 4").out).at(1) == "chebyshev,3,3,4,0");
  CHECK(lines(cli("corr --N 3 --a -pi/9 --tuple 0 --samples 1000 --seed 2").out).at(1).rfind("0,na,", 0) == 0);
  CHECK(cli("corr --count --support sawtooth --max-k 60 --N 2 --r 2 --n-max 1").exit_code == 3);
  CHECK(cli("corr --N 2 --tuple 1,x").exit_code == 2);
}

TEST_CASE("cli sidecar and replay") {
  auto r = cli("cml scan --type 2A --J 64 --K 20 --burn 5 --c-points 3 --a-points 2 --threads 1 --out scan.csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.empty());
  json meta = json::parse(slurp(workdir() / "scan.csv.meta.json"));
  CHECK(meta["format_version"] == "chebydyn-output/1");
  CHECK(meta["command"] == json::array({"cml", "scan"}));
  CHECK(meta["config"]["J"] == "64");
  CHECK(meta["config"]["a-min"] == "-pi/2");  // defaults are echoed
  CHECK_FALSE(meta["config"]["seed"].is_null());  // auto-generated seed is recorded

  REQUIRE(cli("replay scan.csv.meta.json --out again.csv").exit_code == 0);
  CHECK(slurp(workdir() / "scan.csv") == slurp(workdir() / "again.csv"));

  REQUIRE(cli("density --N 2 --a -pi/3 --histogram --traj 10 --steps 100 --burn 5 --bins 20 --out h.csv").exit_code == 0);
  REQUIRE(cli("replay h.csv.meta.json --out h2.csv").exit_code == 0);
  CHECK(slurp(workdir() / "h.csv") == slurp(workdir() / "h2.csv"));

  CHECK(cli("replay missing.meta.json").exit_code != 0);
}

TEST_CASE("cli results do not depend on the thread count") {
  std::string args = "cml scan --type 3A --J 64 --K 20 --burn 5 --c-points 4 --a-points 2 --seed 5";
  auto one = cli(args + " --threads 1");
  auto env = cli(args, "CHEBYDYN_THREADS=3");
  REQUIRE(one.exit_code == 0);
  CHECK(one.out == env.out);
}

TEST_CASE("cli pattern dump") {
  REQUIRE(cli("cml pattern --type 2B --c 0.13 --J 150 --K 150 --seed 3 --out field.bin").exit_code == 0);
  std::string bytes = slurp(workdir() / "field.bin");
  REQUIRE(bytes.size() == 8 + 150 * 150 * 4);
  CHECK(bytes.substr(0, 8) == std::string("\x96\x00\x00\x00\x96\x00\x00\x00", 8));
  auto csv = cli("cml pattern --type 2B --c 0.13 --J 4 --K 3 --seed 3 --format csv");
  CHECK(lines(csv.out).size() == 3);
  CHECK(cli("cml pattern --type 2B --c 0.13 --seed 3").exit_code == 2);  // binary needs --out
}

TEST_CASE("cli leaves no partial output on error") {
  CHECK(cli("density --N 3 --a -0.3 --exact --out broken.json").exit_code == 2);
  CHECK_FALSE(fs::exists(workdir() / "broken.json"));
  CHECK_FALSE(fs::exists(workdir() / "broken.json.meta.json"));
  CHECK(cli("cml run --type 2A --c 1.5 --J 10 --K 10 --seed 1 --out run.csv").exit_code == 2);
  CHECK_FALSE(fs::exists(workdir() / "run.csv"));
}

TEST_CASE("cli lattice commands") {
  auto run = cli("cml run --type 2A --c 0 --J 500 --K 100 --seed 1");
  REQUIRE(run.exit_code == 0);
  CHECK(lines(run.out).front() == "c,a,snnc,tnnc,snnc_stderr,tnnc_stderr");
  auto two = cli("cml two-site --c 0.3 --traj 20 --steps 600 --burn 100 --bins 10 --seed 1 --out two.csv");
  REQUIRE(two.exit_code == 0);
  json meta = json::parse(slurp(workdir() / "two.csv.meta.json"));
  CHECK(meta["results"]["diagonal_fraction"].get<double>() > 0.99);
  auto zeros = cli("cml zeros --type 2A --a 0 --target tnnc --J 500 --K 100 --c-min 0.8 --c-max 0.95 --c-points 2 --seed 4");
  REQUIRE(zeros.exit_code == 0);
  CHECK(lines(zeros.out).front() == "a,target,c_star,half_width,noise_limited");
}
