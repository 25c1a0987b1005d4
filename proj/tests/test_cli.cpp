#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "swarmk/analysis.hpp"
#include "swarmk/cli.hpp"

using namespace swarmk;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<double> csv_row(const std::string& line) {
  std::vector<double> v;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) v.push_back(std::stod(cell));
  return v;
}

std::string temp_file(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("trajectory header and numbers") {
    Result r = cli({"run", "--model", "stickpull-simple", "--t-end", "1", "--dt", "0.25"});
    CHECK(r.code == exit_ok);
    auto l = lines(r.out);
    REQUIRE(l.size() == 6);
    CHECK(l[0] == "t,n,g,m");
    CHECK(l[1] == "0,1,0,1");
    CHECK(l[2].rfind("0.25,0.79818999304938265,", 0) == 0);
    Result f = cli({"run", "--model", "foraging", "--t-end", "1"});
    CHECK(lines(f.out)[0] == "t,Ns,Nh,Nas,Nah,M");
  }

  TEST_CASE("json round trip is exact") {
    Result csv = cli({"run", "--model", "stickpull-delayed", "--t-end", "20", "--stride", "100"});
    Result js = cli({"run", "--model", "stickpull-delayed", "--t-end", "20", "--stride", "100", "--format", "json"});
    REQUIRE(js.code == exit_ok);
    auto j = nlohmann::json::parse(js.out);
    CHECK(j["flavor"] == "dde");
    CHECK(j["names"] == std::vector<std::string>{"n", "g", "m"});
    auto l = lines(csv.out);
    REQUIRE(j["times"].size() + 1 == l.size());
    for (std::size_t i = 0; i < j["times"].size(); ++i) {
      auto row = csv_row(l[i + 1]);
      CHECK(row[0] == j["times"][i].get<double>());
      for (std::size_t k = 0; k < 3; ++k) CHECK(row[k + 1] == j["values"][i][k].get<double>());
    }
  }

  TEST_CASE("steady state output") {
    Result r = cli({"steady", "--model", "stickpull-simple", "--set", "beta=0.5", "--set", "gamma=0.2"});
    CHECK(r.code == exit_ok);
    auto l = lines(r.out);
    REQUIRE(l.size() == 4);
    CHECK(l[0].rfind("n_star=0.2800", 0) == 0);
    CHECK(std::fabs(std::stod(l[0].substr(7)) - 0.2801) < 1e-4);
    CHECK(std::stod(l[1].substr(9)) < 1e-12);
    CHECK(l[2] == "branch=unique");
  }

  TEST_CASE("sweep header and monotone collaboration above the critical ratio") {
    Result r = cli({"sweep", "--model", "stickpull-delayed", "--set", "beta=1.5", "--param", "tau", "--from", "0", "--to", "20",
                    "--steps", "40"});
    CHECK(r.code == exit_ok);
    auto l = lines(r.out);
    REQUIRE(l.size() == 41);
    CHECK(l[0] == "param,n_star,R");
    double last = -1.0;
    for (std::size_t i = 1; i < l.size(); ++i) {
      double R = csv_row(l[i])[2];
      CHECK(R >= last);
      last = R;
    }
  }

  TEST_CASE("validate reports the unknown identifier with its position") {
    std::string bad = temp_file("swarmk_bad.mas", "param k = 1\nstate S = 1\nstate G = 0\nrate(k * N_x) : S -> G\n");
    Result r = cli({"validate", "--model", bad});
    CHECK(r.code == exit_model);
    CHECK(r.err.find("unknown identifier N_x") != std::string::npos);
    CHECK(r.err.find(bad + ":4:10") != std::string::npos);
    CHECK(r.out.empty());
    Result ok = cli({"validate", "--model", "sugawara"});
    CHECK(ok.code == exit_ok);
    CHECK(ok.out.rfind("ok: sugawara", 0) == 0);
  }

  TEST_CASE("exit codes") {
    CHECK(cli({}).code == exit_usage);
    CHECK(cli({"frobnicate"}).code == exit_usage);
    CHECK(cli({"run", "--model", "stickpull-simple", "--format", "xml"}).code == exit_usage);
    CHECK(cli({"run", "--model", "stickpull-simple", "--set", "beta"}).code == exit_usage);
    CHECK(cli({"run", "--model", "nope"}).code == exit_model);
    CHECK(cli({"run", "--model", "stickpull-simple", "--set", "zeta=1"}).code == exit_model);
    Result num = cli({"run", "--model", "stickpull-simple", "--dt", "7", "--t-end", "100"});
    CHECK(num.code == exit_numeric);
    CHECK(num.err.find("numeric error") != std::string::npos);
    Result ex = cli({"exact", "--model", "stickpull-delayed", "--t-end", "5"});
    CHECK(ex.code == exit_numeric);
    CHECK(cli({"--help"}).code == exit_ok);
  }

  TEST_CASE("stochastic output is reproducible byte for byte") {
    std::vector<std::string> args{"mc", "--model", "stickpull-counts", "--runs", "50", "--seed", "9", "--t-end", "100", "--dt", "10"};
    Result a = cli(args);
    Result b = cli(args);
    CHECK(a.code == exit_ok);
    CHECK(a.out == b.out);
    CHECK(lines(a.out)[0] == "t,Ns_mean,Ns_stderr,Ng_mean,Ng_stderr,M_mean,M_stderr");
    CHECK(lines(a.out).size() == 12);
  }

  TEST_CASE("compare joins the three estimates") {
    Result r = cli({"compare", "--model", "stickpull-simple", "--t-end", "5", "--dt", "1", "--runs", "200", "--set", "robots=4"});
    CHECK(r.code == exit_ok);
    auto l = lines(r.out);
    REQUIRE(l.size() == 7);
    CHECK(l[0].rfind("t,n_mf,n_exact,n_mc,n_mc_stderr,n_gap_exact,n_gap_mc,", 0) == 0);
    auto row = csv_row(l[5]);
    CHECK(row[5] == doctest::Approx(row[2] - row[1]).epsilon(1e-12));
    Result d = cli({"compare", "--model", "stickpull-delayed", "--t-end", "10", "--dt", "2", "--runs", "20"});
    CHECK(d.code == exit_ok);
    CHECK(lines(d.out)[0].rfind("t,n_mf,n_mc,n_mc_stderr,n_gap_mc,", 0) == 0);
  }

  TEST_CASE("output file") {
    auto path = (std::filesystem::temp_directory_path() / "swarmk_list.txt").string();
    Result r = cli({"list", "--out", path});
    CHECK(r.code == exit_ok);
    CHECK(r.out.empty());
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("stickpull-simple\t", 0) == 0);
  }
}
