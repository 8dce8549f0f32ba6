// Command-line front end: synth, run, report.

#include <omp.h>

#include <CLI11.hpp>
#include <iostream>

#include "dspn/log.hpp"
#include "dspn/pipeline.hpp"
#include "dspn/synthgen.hpp"

using namespace dspn;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitStage = 4;

int exit_code_for(const std::exception& e) {
  if (const auto* s = dynamic_cast<const pipeline::StageError*>(&e)) return s->io() ? kExitIo : kExitStage;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const LoadError*>(&e)) return kExitIo;
  if (dynamic_cast<const Error*>(&e)) return kExitConfig;
  return kExitStage;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string out;
  double fs = 2000.0;
  double duration = 1.5;
  double effect_scale = 1.0;
  std::vector<std::size_t> trials, subjects;
};

int cmd_synth(const SynthArgs& a) {
  synth::SynthSpec spec;
  spec.seed = a.seed;
  spec.fs = a.fs;
  spec.duration_s = a.duration;
  if (!a.trials.empty()) std::copy(a.trials.begin(), a.trials.end(), spec.trials_per_class.begin());
  if (!a.subjects.empty()) std::copy(a.subjects.begin(), a.subjects.end(), spec.subjects_per_class.begin());
  spec = spec.with_effect_scale(a.effect_scale);
  const auto d = synth::generate_dataset(spec);
  const auto manifest = synth::write_fixture(d, a.out);
  std::cout << "wrote " << d.trials.size() << " trials to " << manifest.string() << '\n';
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool envelopes = false;
};

int cmd_run(const RunArgs& a) {
  auto cfg = pipeline::load_run_config(a.config);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.seed) cfg.cv.seed = *a.seed;
  if (a.envelopes) cfg.write_envelopes = true;
  const auto r = pipeline::run(cfg);
  std::cout << pipeline::format_summary(cfg, r);
  std::cout << "report: " << r.report_path.string() << '\n';
  return 0;
}

int cmd_report(const std::vector<std::string>& reports, const std::string& out) {
  std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
  const auto rows = pipeline::merge_reports(paths, out);
  std::cout << "wrote " << rows << " comparison rows to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DSPN gait-severity classification pipeline"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "OpenMP thread count (default: runtime choice)")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "suppress warnings");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic fixture dataset");
  synth->add_option("--seed", sa.seed, "generator seed")->required();
  synth->add_option("--out", sa.out, "output directory")->required();
  synth->add_option("--fs", sa.fs, "sampling rate in Hz (>= 1000)");
  synth->add_option("--duration", sa.duration, "trial length in seconds");
  synth->add_option("--effect-scale", sa.effect_scale, "scale of class effects (1 = defaults, 0 = none)");
  synth->add_option("--trials", sa.trials, "trials per class: Absent Mild Moderate Severe")->expected(4);
  synth->add_option("--subjects", sa.subjects, "subjects per class: Absent Mild Moderate Severe")->expected(4);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run the pipeline from a config file");
  run->add_option("config", ra.config, "run config (JSON)")->required();
  run->add_option("--out", ra.out, "override out_dir");
  run->add_option("--seed", ra.seed, "override seed");
  run->add_flag("--envelopes", ra.envelopes, "also write preprocessed EMG envelopes");

  std::vector<std::string> reports;
  std::string report_out;
  auto* report = app.add_subcommand("report", "merge run reports into a side-by-side comparison CSV");
  report->add_option("reports", reports, "report.json files")->required();
  report->add_option("--out", report_out, "comparison CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  log::set_quiet(quiet);
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (*synth) return cmd_synth(sa);
    if (*run) return cmd_run(ra);
    return cmd_report(reports, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
