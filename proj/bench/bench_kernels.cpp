// Serial reference vs OpenMP kernel, one pair per parallel stage.

#include <benchmark/benchmark.h>

#include "dspn/log.hpp"
#include "dspn/pipeline.hpp"
#include "dspn/synthgen.hpp"

using namespace dspn;

namespace {

synth::SynthSpec bench_spec() {
  synth::SynthSpec s;
  s.subjects_per_class = {6, 4, 4, 3};
  s.trials_per_class = {30, 20, 18, 16};
  s.seed = 7;
  return s;
}

const Dataset& dataset() {
  static const Dataset d = [] {
    log::set_quiet(true);
    return synth::generate_dataset(bench_spec());
  }();
  return d;
}

const std::vector<ChannelKind>& emg() {
  static const auto c = sel::channel_combinations(ChannelFamily::EMG).back();
  return c;
}

const pipeline::PreparedSignals& prepared() {
  static const auto p = pipeline::prepare_signals(dataset(), emg(), {}, {});
  return p;
}

const FeatureMatrix& matrix() {
  static const auto m = feat::extract_matrix(dataset(), emg(), synth::kTruthScheme, {}, prepared().signals,
                                             prepared().segments)
                            .matrix;
  return m;
}

void BM_generate_dataset(benchmark::State& st) {
  const auto spec = bench_spec();
  for (auto _ : st)
    benchmark::DoNotOptimize(st.range(0) ? synth::generate_dataset(spec) : synth::generate_dataset_serial(spec));
}

void BM_prepare_signals(benchmark::State& st) {
  const auto& d = dataset();
  for (auto _ : st)
    benchmark::DoNotOptimize(st.range(0) ? pipeline::prepare_signals(d, emg(), {}, {})
                                         : pipeline::prepare_signals_serial(d, emg(), {}, {}));
}

void BM_extract_matrix(benchmark::State& st) {
  const auto& p = prepared();
  for (auto _ : st)
    benchmark::DoNotOptimize(
        st.range(0) ? feat::extract_matrix(dataset(), emg(), synth::kTruthScheme, {}, p.signals, p.segments)
                    : feat::extract_matrix_serial(dataset(), emg(), synth::kTruthScheme, {}, p.signals, p.segments));
}

void BM_correlation_matrix(benchmark::State& st) {
  const auto& m = matrix();
  for (auto _ : st)
    benchmark::DoNotOptimize(st.range(0) ? sel::correlation_matrix(m) : sel::correlation_matrix_serial(m));
}

void BM_relieff_rank(benchmark::State& st) {
  const auto& m = matrix();
  for (auto _ : st) benchmark::DoNotOptimize(st.range(0) ? sel::relieff_rank(m) : sel::relieff_rank_serial(m));
}

void BM_evaluate_cv(benchmark::State& st) {
  const auto& m = matrix();
  auto spec = learn::TrainerSpec::adaboost_m2();
  spec.cycles = 30;
  const learn::CvConfig cv;
  for (auto _ : st)
    benchmark::DoNotOptimize(st.range(0) ? learn::evaluate_cv(m, spec, cv) : learn::evaluate_cv_serial(m, spec, cv));
}

}  // namespace

// Arg 0: serial reference, arg 1: OpenMP.
BENCHMARK(BM_generate_dataset)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_prepare_signals)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_extract_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_correlation_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_relieff_rank)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_evaluate_cv)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
