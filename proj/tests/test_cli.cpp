#include <sys/wait.h>

#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "doctest.h"
#include "dspn/feature_matrix.hpp"
#include "dspn/segmentation.hpp"
#include "dspn/selection.hpp"
#include "test_util.hpp"

using namespace dspn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Result {
  int code;
  std::string output;
};

Result cli(const std::string& args, const fs::path& scratch) {
  const auto log = scratch / "cli.log";
  const std::string cmd = std::string(DSPN_CLI) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

json base_config(const fs::path& manifest, const fs::path& out) {
  return {{"format", "dspn-run"},
          {"version", 1},
          {"dataset", manifest.string()},
          {"scheme", "synthetic-truth"},
          {"family", "EMG"},
          {"channels", {"EMG_TA", "EMG_GM"}},
          {"seed", 5},
          {"out_dir", out.string()},
          {"learner", {{"method", "AdaBoostM2"}, {"cycles", 15}}},
          {"search", {{"max_k", 4}}}};
}

fs::path write_json(const fs::path& path, const json& j) {
  std::ofstream(path) << j.dump(2);
  return path;
}

// Small dataset shared by the run tests.
const fs::path& small_data() {
  static testutil::TempDir dir("cli_data");
  static const fs::path manifest = [] {
    const auto r = cli("-q synth --seed 3 --out " + q(dir.path()) + " --trials 20 20 20 20 --subjects 4 4 4 4",
                       dir.path());
    REQUIRE(r.code == 0);
    return dir.path() / "manifest.json";
  }();
  return manifest;
}

}  // namespace

TEST_CASE("cli: synth exit codes") {
  testutil::TempDir dir("cli_synth");
  auto r = cli("synth --seed 1 --out " + q(dir.path() / "d") + " --trials 2 2 2 2 --subjects 1 1 1 1", dir.path());
  CHECK(r.code == 0);
  CHECK(fs::exists(dir.path() / "d" / "manifest.json"));

  r = cli("synth --seed 1 --out " + q(dir.path() / "e") + " --fs 500", dir.path());
  CHECK(r.code == 2);
  CHECK(r.output.find("error:") != std::string::npos);

  r = cli("synth --out " + q(dir.path() / "e"), dir.path());
  CHECK(r.code == 2);

  std::ofstream(dir.path() / "blocker") << "x";
  r = cli("synth --seed 1 --out " + q(dir.path() / "blocker" / "sub") + " --trials 2 2 2 2 --subjects 1 1 1 1",
          dir.path());
  CHECK(r.code == 3);

  CHECK(cli("--help", dir.path()).code == 0);
  CHECK(cli("", dir.path()).code == 2);
}

TEST_CASE("cli: run writes parseable artifacts") {
  testutil::TempDir dir("cli_run");
  const auto out = dir.path() / "out";
  const auto cfg = write_json(dir.path() / "run.json", base_config(small_data(), out));
  const auto r = cli("run " + q(cfg) + " --envelopes", dir.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  CHECK(r.output.find("best K = ") != std::string::npos);

  const auto report = json::parse(slurp(out / "report.json"));
  CHECK(report.at("format") == "dspn-report");
  CHECK(report.at("version") == 1);
  CHECK(report.at("columns_total") == 38);
  CHECK(report.at("entries").size() == 4);
  const auto& best = report.at("best");
  for (const char* k : {"accuracy", "sensitivity", "specificity", "precision", "f1"}) {
    CHECK(best.at(k).at("mean").get<double>() >= 0.0);
    CHECK(best.at(k).at("mean").get<double>() <= 100.0);
  }
  CHECK(best.at("auc").get<double>() >= 0.0);
  CHECK(best.at("auc").get<double>() <= 1.0);
  CHECK(best.at("confusion").size() == 4);

  const auto features = read_feature_matrix_csv(out / "features.csv");
  CHECK(features.rows() == 80);
  CHECK(features.cols() == 38);
  const auto ranking = sel::read_ranking_csv(out / "ranking.csv");
  CHECK(ranking.order.size() == report.at("columns_kept").get<std::size_t>());
  CHECK(ranking.order.front() == report.at("ranking")[0].at("name").get<std::string>());
  const auto segments = seg::read_segments_csv(out / "segments.csv");
  CHECK_FALSE(segments.empty());
  CHECK(fs::exists(out / "metrics.csv"));
  CHECK(fs::exists(out / "roc.csv"));
  CHECK(fs::exists(out / "profiles_EMG_TA.csv"));
  CHECK(fs::exists(out / "envelopes"));
  CHECK_FALSE(fs::exists(out / "FAILED"));
}

TEST_CASE("cli: mixed families are rejected") {
  testutil::TempDir dir("cli_mixed");
  auto j = base_config(small_data(), dir.path() / "out");
  j["channels"] = {"EMG_TA", "GRF_Z"};
  const auto r = cli("run " + q(write_json(dir.path() / "run.json", j)), dir.path());
  CHECK(r.code == 2);
  CHECK(r.output.find("EMG and GRF channels are never mixed in one combination") != std::string::npos);
}

TEST_CASE("cli: report.json does not depend on the thread count") {
  testutil::TempDir dir("cli_threads");
  const auto cfg = write_json(dir.path() / "run.json", base_config(small_data(), dir.path() / "a"));
  REQUIRE(cli("-q --threads 1 run " + q(cfg), dir.path()).code == 0);
  REQUIRE(cli("-q --threads 3 run " + q(cfg) + " --out " + q(dir.path() / "b"), dir.path()).code == 0);
  const auto a = slurp(dir.path() / "a" / "report.json");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(dir.path() / "b" / "report.json"));
}

TEST_CASE("cli: a failing stage leaves a marker and earlier artifacts") {
  testutil::TempDir dir("cli_fail");
  REQUIRE(cli("-q synth --seed 4 --out " + q(dir.path() / "data") + " --trials 20 20 20 5 --subjects 4 4 4 2",
              dir.path())
              .code == 0);
  const auto out = dir.path() / "out";
  const auto cfg = write_json(dir.path() / "run.json", base_config(dir.path() / "data" / "manifest.json", out));
  const auto r = cli("-q run " + q(cfg), dir.path());
  CHECK(r.code == 4);
  REQUIRE(fs::exists(out / "FAILED"));
  CHECK(slurp(out / "FAILED").rfind("evaluate:", 0) == 0);
  CHECK(fs::exists(out / "features.csv"));
  CHECK(fs::exists(out / "segments.csv"));
  CHECK_FALSE(fs::exists(out / "report.json"));

  const auto missing = write_json(dir.path() / "missing.json", base_config(dir.path() / "nowhere.json", out));
  CHECK(cli("-q run " + q(missing), dir.path()).code == 3);
}

TEST_CASE("cli: report merges runs side by side") {
  testutil::TempDir dir("cli_report");
  std::vector<fs::path> reports;
  for (const char* scheme : {"synthetic-truth", "perturbed"}) {
    auto j = base_config(small_data(), dir.path() / scheme);
    j["scheme"] = scheme;
    j["search"] = {{"incremental", false}, {"max_k", 3}};
    REQUIRE(cli("-q run " + q(write_json(dir.path() / (std::string(scheme) + ".json"), j)), dir.path()).code == 0);
    reports.push_back(dir.path() / scheme / "report.json");
  }
  const auto csv = dir.path() / "cmp.csv";
  auto r = cli("report " + q(reports[0]) + " " + q(reports[1]) + " --out " + q(csv), dir.path());
  REQUIRE_MESSAGE(r.code == 0, r.output);
  std::istringstream lines(slurp(csv));
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header ==
        "family,combo,synthetic-truth/AdaBoostM2_accuracy,synthetic-truth/AdaBoostM2_std,"
        "perturbed/AdaBoostM2_accuracy,perturbed/AdaBoostM2_std");
  CHECK(row.rfind("EMG,", 0) == 0);
  CHECK_FALSE(std::getline(lines, extra));

  r = cli("report " + q(reports[0]) + " --out " + q(dir.path() / "one.csv"), dir.path());
  CHECK(r.code == 0);
  const auto one = slurp(dir.path() / "one.csv");
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);

  r = cli("report " + q(reports[0]) + " " + q(reports[0]) + " --out " + q(csv), dir.path());
  CHECK(r.code == 2);

  auto j = json::parse(slurp(reports[1]));
  j["version"] = 2;
  const auto bumped = write_json(dir.path() / "v2.json", j);
  r = cli("report " + q(reports[0]) + " " + q(bumped) + " --out " + q(csv), dir.path());
  CHECK(r.code == 2);
  CHECK(r.output.find("schema version") != std::string::npos);
}
