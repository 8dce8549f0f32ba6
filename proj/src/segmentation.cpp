#include "dspn/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dspn/log.hpp"

namespace dspn::seg {
namespace fs = std::filesystem;

void ChangePointConfig::validate() const {
  if (min_segment_len < 2) throw InvalidInput("min_segment_len must be >= 2");
  if (max_change_points < 1) throw InvalidInput("max_change_points must be >= 1");
  if (penalty && !(*penalty >= 0.0)) throw InvalidInput("penalty must be >= 0");
}

void BurstConfig::validate() const {
  if (!(off_frac > 0.0 && off_frac <= on_frac && on_frac < 1.0))
    throw InvalidInput("burst thresholds must satisfy 0 < off_frac <= on_frac < 1");
}

LinearCost::LinearCost(std::span<const double> x)
    : n_(x.size()), s_t_(n_ + 1), s_tt_(n_ + 1), s_x_(n_ + 1), s_tx_(n_ + 1), s_xx_(n_ + 1) {
  for (std::size_t i = 0; i < n_; ++i) {
    const long double t = static_cast<long double>(i);
    const long double v = x[i];
    s_t_[i + 1] = s_t_[i] + t;
    s_tt_[i + 1] = s_tt_[i] + t * t;
    s_x_[i + 1] = s_x_[i] + v;
    s_tx_[i + 1] = s_tx_[i] + t * v;
    s_xx_[i + 1] = s_xx_[i] + v * v;
  }
}

double LinearCost::rss(std::size_t a, std::size_t b) const {
  const long double n = static_cast<long double>(b - a);
  if (n < 2) return 0.0;
  const long double st = s_t_[b] - s_t_[a];
  const long double stt = s_tt_[b] - s_tt_[a];
  const long double sx = s_x_[b] - s_x_[a];
  const long double stx = s_tx_[b] - s_tx_[a];
  const long double sxx = s_xx_[b] - s_xx_[a];
  const long double vtt = stt - st * st / n;
  const long double vtx = stx - st * sx / n;
  const long double vxx = sxx - sx * sx / n;
  const long double r = vxx - vtx * vtx / vtt;
  return r > 0 ? static_cast<double>(r) : 0.0;
}

namespace {

struct Split {
  std::size_t at = 0;
  double gain = -1.0;
};

Split best_split(const LinearCost& cost, std::size_t a, std::size_t b, std::size_t min_len) {
  Split best;
  if (b - a < 2 * min_len) return best;
  const double whole = cost.rss(a, b);
  for (std::size_t s = a + min_len; s + min_len <= b; ++s) {
    const double g = whole - cost.rss(a, s) - cost.rss(s, b);
    if (g > best.gain) best = {s, g};
  }
  return best;
}

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

std::vector<std::size_t> detect_change_points(const SignalTrace& x, const ChangePointConfig& cfg) {
  cfg.validate();
  const auto& v = x.samples();
  const std::size_t n = v.size();
  if (n < 2 * cfg.min_segment_len)
    throw InvalidInput("signal of " + std::to_string(n) + " samples is shorter than 2*min_segment_len");

  // Standardise so the search and the auto penalty are affine invariant.
  double mean = 0.0;
  for (double s : v) mean += s;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double s : v) var += (s - mean) * (s - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return {};
  const double sd = std::sqrt(var);
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (v[i] - mean) / sd;

  double penalty;
  if (cfg.penalty) {
    penalty = *cfg.penalty / var;  // user penalty is in squared signal units
  } else {
    std::vector<double> d2;
    d2.reserve(n);
    for (std::size_t i = 1; i + 1 < n; ++i) d2.push_back(std::abs(z[i + 1] - 2.0 * z[i] + z[i - 1]));
    const double sigma = median_abs(std::move(d2)) / (0.6745 * std::sqrt(6.0));
    penalty = 2.0 * std::log(static_cast<double>(n)) * sigma * sigma;
  }
  // Rounding floor: total sum of squares of z is n.
  const double floor = 1e-9 * static_cast<double>(n);

  const LinearCost cost(z);
  std::vector<std::pair<std::size_t, std::size_t>> pieces{{0, n}};
  std::vector<Split> splits{best_split(cost, 0, n, cfg.min_segment_len)};
  std::vector<std::size_t> cps;
  while (cps.size() < cfg.max_change_points) {
    std::size_t pick = splits.size();
    for (std::size_t i = 0; i < splits.size(); ++i)
      if (splits[i].gain > penalty + floor && (pick == splits.size() || splits[i].gain > splits[pick].gain))
        pick = i;
    if (pick == splits.size()) break;
    const auto [a, b] = pieces[pick];
    const std::size_t s = splits[pick].at;
    cps.push_back(s);
    pieces[pick] = {a, s};
    splits[pick] = best_split(cost, a, s, cfg.min_segment_len);
    pieces.emplace_back(s, b);
    splits.push_back(best_split(cost, s, b, cfg.min_segment_len));
  }
  std::sort(cps.begin(), cps.end());
  return cps;
}

Segment segment_stance(const SignalTrace& grfz, const ChangePointConfig& cfg) {
  const auto& v = grfz.samples();
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) throw StanceNotFound("vertical force never rises above zero");

  auto cps = detect_change_points(grfz, cfg);
  std::vector<std::size_t> bounds{0};
  bounds.insert(bounds.end(), cps.begin(), cps.end());
  bounds.push_back(v.size());

  const std::size_t regions = bounds.size() - 1;
  std::vector<double> means(regions);
  for (std::size_t r = 0; r < regions; ++r) {
    double s = 0.0;
    for (std::size_t i = bounds[r]; i < bounds[r + 1]; ++i) s += v[i];
    means[r] = s / static_cast<double>(bounds[r + 1] - bounds[r]);
  }
  const std::size_t top = static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
  const double loaded = 0.05 * peak;
  if (!(means[top] > loaded)) throw StanceNotFound("no region with mean above 5% of peak force");

  // Grow over neighbouring loaded regions.
  std::size_t lo = top, hi = top;
  while (lo > 0 && means[lo - 1] > loaded) --lo;
  while (hi + 1 < regions && means[hi + 1] > loaded) ++hi;
  Segment seg{bounds[lo], bounds[hi + 1], ChannelKind::GRF_Z};

  if (seg.length() < cfg.min_segment_len) {
    const std::size_t need = cfg.min_segment_len - seg.length();
    const std::size_t left = std::min(seg.start, need / 2);
    seg.start -= left;
    seg.end = std::min(v.size(), seg.end + (need - left));
    if (seg.length() < cfg.min_segment_len) seg.start = seg.end - cfg.min_segment_len;
  }
  return seg;
}

std::vector<Segment> propagate_segment(const Segment& seg, std::size_t source_length,
                                       std::span<const SignalTrace> targets,
                                       std::span<const ChannelKind> target_kinds) {
  if (targets.size() != target_kinds.size())
    throw InvalidInput("propagate_segment: one channel kind per target required");
  std::vector<Segment> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].size() != source_length)
      throw InvalidInput("target " + std::string(channel_name(target_kinds[i])) + " has " +
                         std::to_string(targets[i].size()) + " samples, source has " +
                         std::to_string(source_length));
    out.push_back({seg.start, seg.end, target_kinds[i]});
  }
  return out;
}

std::vector<Segment> detect_emg_bursts(const SignalTrace& envelope, const BurstConfig& cfg, ChannelKind channel) {
  cfg.validate();
  const auto& v = envelope.samples();
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) throw NoActivity("envelope has no activity (peak = 0)");
  for (double s : v)
    if (s < -1e-9 * peak) throw InvalidInput("envelope must be nonnegative");

  const double on = cfg.on_frac * peak, off = cfg.off_frac * peak;
  struct Burst {
    std::size_t onset, offset;
  };
  std::vector<Burst> bursts;
  bool active = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!active && v[i] >= on) {
      bursts.push_back({i, v.size()});
      active = true;
    } else if (active && v[i] < off) {
      bursts.back().offset = i;
      active = false;
    }
  }

  // Short bursts fold into the preceding burst (or the following one when
  // they lead the record).
  std::vector<Burst> kept;
  std::optional<Burst> lead;
  for (const auto& b : bursts) {
    const bool is_short = b.offset - b.onset < cfg.min_burst_len;
    if (!is_short && lead) {
      kept.push_back({lead->onset, b.offset});
      lead.reset();
    } else if (!is_short) {
      kept.push_back(b);
    } else if (!kept.empty()) {
      kept.back().offset = std::max(kept.back().offset, b.offset);
    } else if (lead) {
      lead->offset = b.offset;
    } else {
      lead = b;
    }
  }
  if (lead) kept.push_back(*lead);

  if (kept.size() != cfg.expected_bursts)
    log::warn("detected " + std::to_string(kept.size()) + " EMG bursts in " + std::string(channel_name(channel)) +
              ", expected " + std::to_string(cfg.expected_bursts));

  std::vector<Segment> out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::size_t end = i + 1 < kept.size() ? kept[i + 1].onset : v.size();
    out.push_back({kept[i].onset, end, channel});
  }
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

std::size_t parse_index(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw InvalidOverride(where + ": '" + s + "' is not a nonnegative index");
  }
}

}  // namespace

SegmentTable apply_override(const SegmentTable& table, const fs::path& override_path) {
  std::ifstream in(override_path);
  if (!in) throw InvalidOverride("cannot open override file " + override_path.string());
  SegmentTable out = table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto cells = split_csv(line);
    if (lineno == 1 && !cells.empty() && cells[0] == "trial_id") continue;
    const std::string where = override_path.string() + ":" + std::to_string(lineno);
    if (cells.size() != 5) throw InvalidOverride(where + ": expected 5 columns");
    ChannelKind ch;
    try {
      ch = parse_channel(cells[1]);
    } catch (const InvalidInput& e) {
      throw InvalidOverride(where + ": " + e.what());
    }
    auto it = out.find({cells[0], ch});
    if (it == out.end()) throw InvalidOverride(where + ": no segments for " + cells[0] + "/" + cells[1]);
    const std::size_t idx = parse_index(cells[2], where);
    const std::size_t start = parse_index(cells[3], where);
    const std::size_t end = parse_index(cells[4], where);
    auto& set = it->second;
    if (idx >= set.segments.size())
      throw InvalidOverride(where + ": segment_index " + std::to_string(idx) + " out of range");
    if (end <= start) throw InvalidOverride(where + ": end must exceed start");
    if (end > set.signal_length)
      throw InvalidOverride(where + ": end " + std::to_string(end) + " beyond signal length " +
                            std::to_string(set.signal_length));
    set.segments[idx].start = start;
    set.segments[idx].end = end;
  }
  return out;
}

void write_segments_csv(const SegmentTable& table, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "trial_id,channel,segment_index,start,end,signal_length\n";
  for (const auto& [key, set] : table)
    for (std::size_t i = 0; i < set.segments.size(); ++i)
      out << key.trial_id << ',' << channel_name(key.channel) << ',' << i << ',' << set.segments[i].start << ','
          << set.segments[i].end << ',' << set.signal_length << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

SegmentTable read_segments_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  SegmentTable table;
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw LoadError(path.string() + ":" + std::to_string(lineno) + ": expected 6 columns");
    const ChannelKind ch = parse_channel(cells[1]);
    auto& set = table[{cells[0], ch}];
    set.signal_length = std::stoull(cells[5]);
    set.segments.push_back({std::stoull(cells[3]), std::stoull(cells[4]), ch});
  }
  return table;
}

std::vector<double> resample_linear(std::span<const double> x, std::size_t length) {
  std::vector<double> out(length);
  if (x.empty() || length == 0) return out;
  if (x.size() == 1 || length == 1) {
    std::fill(out.begin(), out.end(), x[0]);
    return out;
  }
  const double step = static_cast<double>(x.size() - 1) / static_cast<double>(length - 1);
  for (std::size_t j = 0; j < length; ++j) {
    const double pos = step * static_cast<double>(j);
    const auto i = std::min(static_cast<std::size_t>(pos), x.size() - 2);
    const double f = pos - static_cast<double>(i);
    out[j] = x[i] + f * (x[i + 1] - x[i]);
  }
  return out;
}

std::vector<ClassProfile> class_profiles(std::vector<ProfileInput> inputs, std::size_t length) {
  std::sort(inputs.begin(), inputs.end(),
            [](const ProfileInput& a, const ProfileInput& b) { return a.trial_id < b.trial_id; });
  std::vector<ClassProfile> out;
  for (auto grade : kAllGrades) {
    std::vector<std::vector<double>> curves;
    for (const auto& in : inputs) {
      if (in.grade != grade) continue;
      double ss = 0.0;
      for (double v : in.curve) ss += v * v;
      const double rms = in.curve.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(in.curve.size()));
      auto r = resample_linear(in.curve, length);
      if (rms > 0.0)
        for (double& v : r) v /= rms;
      curves.push_back(std::move(r));
    }
    if (curves.empty()) {
      log::warn("grade " + std::string(grade_name(grade)) + " has no trials; profile omitted");
      continue;
    }
    ClassProfile p;
    p.grade = grade;
    p.n_trials = curves.size();
    p.mean_curve.assign(length, 0.0);
    p.std_curve.assign(length, 0.0);
    const double n = static_cast<double>(curves.size());
    for (const auto& c : curves)
      for (std::size_t j = 0; j < length; ++j) p.mean_curve[j] += c[j];
    for (double& m : p.mean_curve) m /= n;
    if (curves.size() > 1) {
      for (const auto& c : curves)
        for (std::size_t j = 0; j < length; ++j) p.std_curve[j] += (c[j] - p.mean_curve[j]) * (c[j] - p.mean_curve[j]);
      for (double& s : p.std_curve) s = std::sqrt(s / (n - 1.0));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<ClassProfile> class_profiles(const Dataset& d, ChannelKind channel, const std::string& scheme,
                                         const dsp::PreprocessConfig& pre, std::size_t length) {
  std::vector<ProfileInput> inputs(d.trials.size());
  std::vector<char> present(d.trials.size(), 0);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < d.trials.size(); ++i) {
    const auto& t = d.trials[i];
    auto g = t.grades.find(scheme);
    auto c = t.channels.find(channel);
    if (g == t.grades.end() || c == t.channels.end()) continue;
    present[i] = 1;
    inputs[i].trial_id = t.trial_id;
    inputs[i].grade = g->second;
    inputs[i].curve = channel_family(channel) == ChannelFamily::EMG ? dsp::preprocess_emg(c->second, pre).envelope.samples()
                                                                     : c->second.samples();
  }
  std::vector<ProfileInput> kept;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (present[i]) kept.push_back(std::move(inputs[i]));
    else throw InvalidInput("trial '" + d.trials[i].trial_id + "' lacks channel " + std::string(channel_name(channel)) +
                            " or grade scheme '" + scheme + "'");
  }
  return class_profiles(std::move(kept), length);
}

void write_profiles_csv(std::span<const ClassProfile> profiles, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "position";
  for (const auto& p : profiles) out << ',' << grade_name(p.grade) << "_mean," << grade_name(p.grade) << "_std";
  out << '\n';
  const std::size_t len = profiles.empty() ? 0 : profiles.front().mean_curve.size();
  for (std::size_t j = 0; j < len; ++j) {
    out << (len > 1 ? format_double(static_cast<double>(j) / static_cast<double>(len - 1)) : "0");
    for (const auto& p : profiles) out << ',' << format_double(p.mean_curve[j]) << ',' << format_double(p.std_curve[j]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dspn::seg
