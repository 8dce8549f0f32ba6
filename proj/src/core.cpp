#include "dspn/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

namespace dspn {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumGrades> kGradeNames = {"Absent", "Mild", "Moderate",
                                                                  "Severe"};
constexpr std::array<std::string_view, 6> kChannelNames = {"EMG_GM", "EMG_TA", "EMG_VL",
                                                           "GRF_X",  "GRF_Y",  "GRF_Z"};
constexpr std::array<std::string_view, 6> kChannelShort = {"GM", "TA", "VL", "GRFx", "GRFy", "GRFz"};

constexpr int kManifestVersion = 1;

}  // namespace

std::string_view grade_name(SeverityGrade g) { return kGradeNames[grade_index(g)]; }

SeverityGrade parse_grade(std::string_view name) {
  for (std::size_t i = 0; i < kNumGrades; ++i)
    if (kGradeNames[i] == name) return static_cast<SeverityGrade>(i);
  throw InvalidInput("unknown severity grade '" + std::string(name) + "'");
}

FuzzyScore::FuzzyScore(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0)
    throw InvalidInput("fuzzy score must be finite and >= 0, got " + format_double(value));
}

SeverityGrade grade_from_fuzzy_score(FuzzyScore score) {
  const double x = score.value();
  if (x <= 2.5) return SeverityGrade::Absent;
  if (x < 5.0) return SeverityGrade::Mild;
  // The published intervals overlap at 8.0; Severe wins the tie.
  if (x < 8.0) return SeverityGrade::Moderate;
  return SeverityGrade::Severe;
}

SeverityGrade grade_from_fuzzy_score(double score) { return grade_from_fuzzy_score(FuzzyScore(score)); }

std::string_view channel_name(ChannelKind c) { return kChannelNames[static_cast<std::size_t>(c)]; }
std::string_view channel_short_name(ChannelKind c) { return kChannelShort[static_cast<std::size_t>(c)]; }

ChannelKind parse_channel(std::string_view name) {
  for (std::size_t i = 0; i < kChannelNames.size(); ++i)
    if (kChannelNames[i] == name || kChannelShort[i] == name) return static_cast<ChannelKind>(i);
  throw InvalidInput("unknown channel '" + std::string(name) + "'");
}

ChannelFamily channel_family(ChannelKind c) {
  switch (c) {
    case ChannelKind::EMG_GM:
    case ChannelKind::EMG_TA:
    case ChannelKind::EMG_VL:
      return ChannelFamily::EMG;
    default:
      return ChannelFamily::GRF;
  }
}

std::string_view family_name(ChannelFamily f) { return f == ChannelFamily::EMG ? "EMG" : "GRF"; }

ChannelFamily parse_family(std::string_view name) {
  if (name == "EMG") return ChannelFamily::EMG;
  if (name == "GRF") return ChannelFamily::GRF;
  throw InvalidInput("unknown channel family '" + std::string(name) + "'");
}

SignalTrace::SignalTrace(std::vector<double> samples, double fs, std::string unit)
    : samples_(std::move(samples)), fs_(fs), unit_(std::move(unit)) {
  if (!(fs_ > 0.0) || !std::isfinite(fs_)) throw InvalidInput("sampling rate must be > 0");
  if (samples_.empty()) throw InvalidInput("signal has no samples");
  for (double v : samples_)
    if (!std::isfinite(v)) throw InvalidInput("signal contains a non-finite sample");
}

SignalTrace SignalTrace::with_samples(std::vector<double> samples) const {
  return SignalTrace(std::move(samples), fs_, unit_);
}

std::array<std::size_t, kNumGrades> Dataset::class_counts(const std::string& scheme) const {
  std::array<std::size_t, kNumGrades> counts{};
  for (const auto& t : trials) {
    auto it = t.grades.find(scheme);
    if (it != t.grades.end()) ++counts[grade_index(it->second)];
  }
  return counts;
}

std::vector<ValidationIssue> validate_dataset(const Dataset& d) {
  using K = ValidationIssue::Kind;
  std::vector<ValidationIssue> issues;
  std::set<std::string> seen;
  const std::set<std::string> schemes(d.manifest.schemes.begin(), d.manifest.schemes.end());

  for (const auto& t : d.trials) {
    if (!seen.insert(t.trial_id).second)
      issues.push_back({K::DuplicateTrialId, t.trial_id, "trial_id appears more than once"});
    if (t.grades.empty()) issues.push_back({K::MissingGrade, t.trial_id, "no grading scheme present"});
    for (const auto& [scheme, g] : t.grades)
      if (!schemes.count(scheme))
        issues.push_back({K::UnknownScheme, t.trial_id, "grade scheme '" + scheme + "' not declared"});
    if (t.channels.empty()) {
      issues.push_back({K::NoChannels, t.trial_id, "trial has no channels"});
      continue;
    }
    // Co-recorded channels must agree in duration to within one sample;
    // deviations are reported against the most common duration.
    std::map<double, std::size_t> votes;
    for (const auto& [kind, sig] : t.channels) ++votes[sig.duration()];
    double ref_dur = 0.0;
    std::size_t best = 0;
    for (const auto& [dur, count] : votes)
      if (count > best) best = count, ref_dur = dur;
    for (const auto& [kind, sig] : t.channels) {
      const double tol = 1.0 / sig.fs();
      if (std::abs(sig.duration() - ref_dur) >= tol * (1.0 - 1e-9)) {
        issues.push_back({K::LengthMismatch, t.trial_id,
                          std::string(channel_name(kind)) + " has " + std::to_string(sig.size()) +
                              " samples, duration " + format_double(sig.duration()) + " s vs " +
                              format_double(ref_dur) + " s"});
      }
    }
  }
  return issues;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text, const fs::path& path, std::size_t line) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r' || text.back() == '\t'))
    text.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw LoadError(path.string() + ":" + std::to_string(line) + ": cannot parse value '" +
                    std::string(text) + "'");
  return v;
}

}  // namespace

SignalTrace read_signal_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open signal file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0)
    throw LoadError(path.string() + ": missing '# fs=<Hz> unit=<V|N>' header");

  double fs_hz = 0.0;
  std::string unit = "V";
  std::istringstream hdr(line.substr(1));
  std::string tok;
  while (hdr >> tok) {
    if (tok.rfind("fs=", 0) == 0) fs_hz = parse_double(std::string_view(tok).substr(3), path, 1);
    else if (tok.rfind("unit=", 0) == 0) unit = tok.substr(5);
  }
  if (!(fs_hz > 0.0)) throw LoadError(path.string() + ": header lacks a positive fs");

  std::vector<double> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    samples.push_back(parse_double(line, path, lineno));
  }
  try {
    return SignalTrace(std::move(samples), fs_hz, unit);
  } catch (const InvalidInput& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

void write_signal_csv(const SignalTrace& s, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::string buf = "# fs=" + format_double(s.fs()) + " unit=" + s.unit() + "\n";
  buf.reserve(s.size() * 22 + buf.size());
  char num[32];
  for (double v : s.samples()) {
    auto res = std::to_chars(num, num + sizeof(num), v);
    buf.append(num, res.ptr);
    buf.push_back('\n');
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw LoadError("cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError(manifest_path.string() + ": " + e.what());
  }

  const fs::path base = manifest_path.parent_path();
  Dataset d;
  try {
    if (doc.value("format", "") != "dspn-manifest")
      throw LoadError(manifest_path.string() + ": not a dspn-manifest document");
    if (doc.value("version", 0) != kManifestVersion)
      throw LoadError(manifest_path.string() + ": unsupported manifest version");
    d.manifest.schemes = doc.at("schemes").get<std::vector<std::string>>();
    for (const auto& s : doc.value("subjects", json::array())) {
      SubjectInfo info;
      info.id = s.at("id").get<std::string>();
      if (s.contains("demographics"))
        info.demographics = s.at("demographics").get<std::map<std::string, std::string>>();
      d.manifest.subjects.push_back(std::move(info));
    }
    const std::set<std::string> schemes(d.manifest.schemes.begin(), d.manifest.schemes.end());
    std::set<std::string> ids;

    for (const auto& jt : doc.at("trials")) {
      Trial t;
      t.trial_id = jt.at("trial_id").get<std::string>();
      t.subject_id = jt.value("subject_id", "");
      if (!ids.insert(t.trial_id).second)
        throw LoadError("duplicate trial_id '" + t.trial_id + "'");
      for (const auto& [scheme, g] : jt.at("grades").items()) {
        if (!schemes.count(scheme))
          throw LoadError("trial '" + t.trial_id + "': unknown grading scheme '" + scheme + "'");
        t.grades.emplace(scheme, parse_grade(g.get<std::string>()));
      }
      if (jt.contains("fuzzy_score")) t.fuzzy_score = jt.at("fuzzy_score").get<double>();
      for (const auto& [name, rel] : jt.at("channels").items()) {
        const fs::path p = base / rel.get<std::string>();
        if (!fs::exists(p))
          throw LoadError("trial '" + t.trial_id + "': signal file not found: " + p.string());
        t.channels.emplace(parse_channel(name), read_signal_csv(p));
      }
      d.trials.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw LoadError(manifest_path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw LoadError(manifest_path.string() + ": " + e.what());
  }

  for (const auto& issue : validate_dataset(d)) {
    if (issue.kind == ValidationIssue::Kind::LengthMismatch)
      throw LoadError("trial '" + issue.trial_id + "': channel length mismatch: " + issue.detail);
    if (issue.kind == ValidationIssue::Kind::MissingGrade)
      throw LoadError("trial '" + issue.trial_id + "': " + issue.detail);
  }
  return d;
}

fs::path write_dataset(const Dataset& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "signals", ec);
  if (ec) throw IoError("cannot create " + (dir / "signals").string() + ": " + ec.message());

  json doc;
  doc["format"] = "dspn-manifest";
  doc["version"] = kManifestVersion;
  doc["schemes"] = d.manifest.schemes;
  doc["subjects"] = json::array();
  for (const auto& s : d.manifest.subjects) {
    json js{{"id", s.id}};
    if (!s.demographics.empty()) js["demographics"] = s.demographics;
    doc["subjects"].push_back(std::move(js));
  }
  doc["trials"] = json::array();
  for (const auto& t : d.trials) {
    json jt{{"trial_id", t.trial_id}, {"subject_id", t.subject_id}};
    jt["grades"] = json::object();
    for (const auto& [scheme, g] : t.grades) jt["grades"][scheme] = std::string(grade_name(g));
    if (t.fuzzy_score) jt["fuzzy_score"] = *t.fuzzy_score;
    jt["channels"] = json::object();
    for (const auto& [kind, sig] : t.channels) {
      const std::string rel = "signals/" + t.trial_id + "_" + std::string(channel_name(kind)) + ".csv";
      write_signal_csv(sig, dir / rel);
      jt["channels"][std::string(channel_name(kind))] = rel;
    }
    doc["trials"].push_back(std::move(jt));
  }

  const fs::path manifest = dir / "manifest.json";
  std::ofstream out(manifest);
  if (!out) throw IoError("cannot write " + manifest.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + manifest.string());
  return manifest;
}

}  // namespace dspn
