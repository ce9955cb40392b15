#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cfbounds/case_study.hpp"
#include "cfbounds/cli.hpp"
#include "cfbounds/model_io.hpp"

using namespace cfb;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    out.push_back(cells);
  }
  return out;
}

std::string tmp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("cfb_cli_" + name)).string();
}

}  // namespace

TEST_CASE("argument parsing helpers") {
  CHECK(cli::parse_range("4..8") == std::vector<std::size_t>{4, 5, 6, 7, 8});
  CHECK(cli::parse_range("6") == std::vector<std::size_t>{6});
  CHECK(cli::parse_seeds("3") == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(cli::parse_seeds("5,9") == std::vector<std::uint64_t>{5, 9});
  CHECK(cli::parse_seeds("2..4") == std::vector<std::uint64_t>{2, 3, 4});
  CHECK_THROWS(cli::parse_range("8..4"));
  CHECK_THROWS(cli::parse_seeds("x"));
}

TEST_CASE("validate") {
  const auto good = tmp("good.json");
  save_model(good, cancer::breast_cancer_model().model);
  CHECK(run({"validate", "--model", good}).code == cli::kOk);
  CHECK(run({"validate", "--scenario", "breast-cancer"}).code == cli::kOk);

  const auto bad = tmp("bad.json");
  std::ofstream(bad) << "{\"num_states\": 7, \"p\": [";
  const auto r = run({"validate", "--model", bad});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("invalid JSON") != std::string::npos);

  const auto neg = tmp("neg.json");
  std::ofstream(neg) << R"({"num_states":1,"num_emissions":2,"num_actions":1,"p":[1],)"
                     << R"("E":[[[1.5,-0.5]]],"Q":[[[1],[1]]]})";
  const auto v = run({"validate", "--model", neg});
  CHECK(v.code == cli::kInputError);
  CHECK(v.out.find("E[1,1,2]") != std::string::npos);

  CHECK(run({"validate", "--model", tmp("missing.json")}).code == cli::kInputError);
}

TEST_CASE("posterior") {
  const auto r = run({"posterior", "--scenario", "breast-cancer", "--path", "path2", "--T", "6",
                      "--B", "40", "--seeds", "1"});
  REQUIRE(r.code == cli::kOk);
  const auto t = rows(r.out);
  CHECK(t.size() == 1 + 40 * 6);
  CHECK(t[0] == std::vector<std::string>{"b", "t", "h"});
  CHECK(t.back() == std::vector<std::string>{"40", "6", "7"});
}

TEST_CASE("input errors exit with 2") {
  CHECK(run({"bounds", "--scenario", "breast-cancer", "--modes", "sideways"}).code ==
        cli::kInputError);
  CHECK(run({"bounds", "--scenario", "breast-cancer", "--T", "3"}).code == cli::kInputError);
  CHECK(run({"bounds", "--scenario", "breast-cancer", "--no-such-flag"}).code ==
        cli::kInputError);
  CHECK(run({"bounds"}).code == cli::kInputError);
  CHECK(run({}).code == cli::kInputError);
}

TEST_CASE("bounds grid rows, aggregates and determinism") {
  const std::vector<std::string> args{"bounds", "--scenario", "breast-cancer", "--path", "path1",
                                      "--T", "4..8", "--B", "100", "--seeds", "20",
                                      "--modes", "base,cs,pm"};
  const auto a = run(args);
  REQUIRE(a.code == cli::kOk);
  const auto t = rows(a.out);
  REQUIRE(t.size() == 1 + 3 * 5 * 20 + 2 * 3 * 5);
  CHECK(t[0].size() == 12);
  CHECK(t[0][5] == "lb");
  std::size_t sd_rows = 0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    CHECK(t[k].size() == 12);
    CHECK(t[k][11].empty());
    if (t[k][3] == "sd") {
      ++sd_rows;
      CHECK(std::stod(t[k][5]) <= 0.02);
      CHECK(std::stod(t[k][6]) <= 0.02);
    }
  }
  CHECK(sd_rows == 15);
  CHECK(run(args).out == a.out);
}

TEST_CASE("output directory and figure table") {
  const auto dir = tmp("out");
  std::filesystem::remove_all(dir);
  const auto r = run({"bounds", "--scenario", "breast-cancer", "--path", "path1,path2", "--T",
                      "5", "--seeds", "2", "--modes", "base,pm", "--restarts", "3", "--out", dir});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.empty());
  std::ifstream f(dir + "/figure3_bounds.csv");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto t = rows(ss.str());
  CHECK(t.size() == 1 + 2 * 2);
  CHECK(t[0] == std::vector<std::string>{"path", "T", "method", "value_lo", "value_hi",
                                         "estimate", "sd"});
  CHECK(std::filesystem::exists(dir + "/bounds.csv"));
}

TEST_CASE("config file with flag precedence") {
  const auto cfg = tmp("run.toml");
  std::ofstream(cfg) << "scenario = \"breast-cancer\"\npath = \"path2\"\nT = \"5\"\nB = 30\n";
  const auto a = run({"posterior", "--config", cfg});
  REQUIRE(a.code == cli::kOk);
  CHECK(rows(a.out).size() == 1 + 30 * 5);
  const auto b = run({"posterior", "--config", cfg, "--B", "10"});
  CHECK(rows(b.out).size() == 1 + 10 * 5);
}

TEST_CASE("copula estimates") {
  const auto r = run({"copula", "--scenario", "breast-cancer", "--path", "path1", "--T", "10",
                      "--seeds", "1", "--copulas", "naive"});
  REQUIRE(r.code == cli::kOk);
  const auto t = rows(r.out);
  REQUIRE(t.size() == 4);
  CHECK(t[1][4] == "naive");
  CHECK(std::stod(t[1][5]) >= 0.95);

  const auto co = run({"copula", "--scenario", "breast-cancer", "--path", "path1", "--T", "6",
                       "--seeds", "3", "--copulas", "comonotonic"});
  const auto pm = run({"bounds", "--scenario", "breast-cancer", "--path", "path1", "--T", "6",
                       "--seeds", "3", "--modes", "pm"});
  REQUIRE(co.code == cli::kOk);
  REQUIRE(pm.code == cli::kOk);
  const auto ct = rows(co.out), bt = rows(pm.out);
  for (std::size_t k = 1; k <= 3; ++k) {
    const double est = std::stod(ct[k][5]), se = std::stod(ct[k][6]);
    CHECK(est >= std::stod(bt[k][5]) - 3 * se);
    CHECK(est <= std::stod(bt[k][6]) + 3 * se);
  }
}
