#include <algorithm>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "dspn/pipeline.hpp"
#include "dspn/synthgen.hpp"
#include "test_util.hpp"

using namespace dspn;
using namespace dspn::synth;
namespace fs = std::filesystem;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.subjects_per_class = {2, 1, 1, 1};
  s.trials_per_class = {3, 2, 2, 2};
  s.seed = seed;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const Dataset& default_dataset() {
  static const Dataset d = [] {
    SynthSpec s;
    s.seed = 7;
    return generate_dataset(s);
  }();
  return d;
}

double cv_accuracy(const Dataset& d) {
  const auto combo = sel::channel_combinations(ChannelFamily::EMG).back();
  const auto prep = pipeline::prepare_signals(d, combo, {}, {});
  sel::StudyConfig sc;
  sc.scheme = kTruthScheme;
  const auto study = sel::assemble_channel_study(d, ChannelFamily::EMG, combo, sc, prep.signals, prep.segments);
  auto spec = learn::TrainerSpec::adaboost_m2();
  spec.cycles = 60;
  learn::CvConfig cv;
  cv.seed = 3;
  return learn::evaluate_cv(study.pruned, spec, cv).accuracy.mean;
}

}  // namespace

TEST_CASE("synthgen: default spec reproduces the cohort counts") {
  const auto& d = default_dataset();
  CHECK(d.trials.size() == 392);
  CHECK(d.class_counts(kTruthScheme) == std::array<std::size_t, 4>{142, 93, 85, 72});
  CHECK(d.manifest.subjects.size() == 77);
  CHECK(validate_dataset(d).empty());
  for (const auto& t : d.trials) {
    REQUIRE(t.channels.size() == 6);
    for (const auto& [k, s] : t.channels) {
      CHECK(s.size() == 3000);
      CHECK(s.fs() == 2000.0);
    }
  }
}

TEST_CASE("synthgen: fuzzy scores map back to the generating grade") {
  for (const auto& t : default_dataset().trials) {
    REQUIRE(t.fuzzy_score.has_value());
    CHECK(grade_from_fuzzy_score(*t.fuzzy_score) == t.grades.at(kTruthScheme));
    CHECK(t.grades.count(kPerturbedScheme) == 1);
  }
}

TEST_CASE("synthgen: determinism") {
  const auto a = generate_dataset(small_spec(5));
  CHECK(a == generate_dataset(small_spec(5)));
  CHECK(a == generate_dataset_serial(small_spec(5)));
  CHECK_FALSE(a == generate_dataset(small_spec(6)));

  testutil::TempDir d1("synth1"), d2("synth2");
  write_fixture(a, d1.path());
  write_fixture(generate_dataset(small_spec(5)), d2.path());
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1.path())) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), d1.path());
    CHECK(slurp(e.path()) == slurp(d2.path() / rel));
  }
  CHECK(files == 1 + 9 * 6);
}

TEST_CASE("synthgen: severe TA peak lags absent by at least half the delay") {
  const auto& d = default_dataset();
  const auto profiles = seg::class_profiles(d, ChannelKind::EMG_TA, kTruthScheme, {}, 1000);
  REQUIRE(profiles.size() == 4);
  auto peak = [](const seg::ClassProfile& p) {
    return std::size_t(std::max_element(p.mean_curve.begin(), p.mean_curve.end()) - p.mean_curve.begin());
  };
  const double step_ms = 1500.0 / 1000.0;
  SynthSpec s;
  const double delay = s.class_effects[3].peak_delay_ms;
  const double lag = (double(peak(profiles[3])) - double(peak(profiles[0]))) * step_ms;
  CHECK(lag >= delay / 2);
  CHECK(lag <= delay * 2);
}

TEST_CASE("synthgen: write/load round trip") {
  const auto d = generate_dataset(small_spec(9));
  testutil::TempDir dir("synth_rt");
  const auto manifest = write_fixture(d, dir.path());
  CHECK(manifest == dir.path() / "manifest.json");
  CHECK(load_dataset(manifest) == d);

  testutil::TempDir empty("synth_empty");
  const auto m2 = write_fixture(Dataset{}, empty.path());
  const auto back = load_dataset(m2);
  CHECK(back.trials.empty());
  CHECK(back == Dataset{});

  testutil::TempDir blocker("synth_ro");
  std::ofstream(blocker.path() / "file") << "x";
  CHECK_THROWS_AS(write_fixture(d, blocker.path() / "file" / "sub"), IoError);
}

TEST_CASE("synthgen: spec validation") {
  SynthSpec s;
  s.fs = 500;
  CHECK_THROWS_AS(generate_dataset(s), SpecError);
  s = SynthSpec{};
  s.trials_per_class[2] = 0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = SynthSpec{};
  s.class_effects[0].amplitude_factor = 0.9;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = SynthSpec{};
  s.class_effects[3].amplitude_factor = 0.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = SynthSpec{};
  s.class_effects[1].peak_delay_ms = -1;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = SynthSpec{};
  s.duration_s = 1.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  CHECK_NOTHROW(SynthSpec{}.validate());

  const auto half = SynthSpec{}.with_effect_scale(0.5);
  CHECK(half.class_effects[3].amplitude_factor == doctest::Approx(0.825));
  CHECK(half.class_effects[3].peak_delay_ms == doctest::Approx(25.0));
  CHECK(half.class_effects[0].amplitude_factor == 1.0);
}

TEST_CASE("synthgen: shrinking class effects lowers CV accuracy") {
  double prev = 101.0;
  for (double scale : {1.0, 0.5, 0.0}) {
    SynthSpec s = SynthSpec{}.with_effect_scale(scale);
    s.seed = 7;
    const double acc = cv_accuracy(generate_dataset(s));
    MESSAGE("effect scale " << scale << ": accuracy " << acc);
    CHECK(acc < prev);
    prev = acc;
  }
  CHECK(prev < 50.0);
}
