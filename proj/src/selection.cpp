#include "dspn/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dspn/log.hpp"

namespace dspn::sel {
namespace {

struct Centered {
  std::vector<std::vector<double>> cols;
  std::vector<double> ss;
  std::vector<bool> constant;
};

Centered center_columns(const FeatureMatrix& m) {
  if (m.rows() < 2) throw InvalidInput("correlation needs at least 2 rows, got " + std::to_string(m.rows()));
  Centered c;
  c.cols.resize(m.cols());
  c.ss.resize(m.cols());
  c.constant.resize(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    auto col = m.column(j);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    c.constant[j] = *lo == *hi;
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double& v : col) {
      v -= mean;
      ss += v * v;
    }
    c.ss[j] = ss;
    c.cols[j] = std::move(col);
  }
  return c;
}

double pair_correlation(const Centered& c, std::size_t i, std::size_t j) {
  if (c.constant[i] || c.constant[j]) return 0.0;
  double s = 0.0;
  const auto& a = c.cols[i];
  const auto& b = c.cols[j];
  for (std::size_t r = 0; r < a.size(); ++r) s += a[r] * b[r];
  return std::clamp(s / std::sqrt(c.ss[i] * c.ss[j]), -1.0, 1.0);
}

CorrelationMatrix correlate(const FeatureMatrix& m, bool parallel) {
  const auto c = center_columns(m);
  CorrelationMatrix out;
  out.n = m.cols();
  out.values.assign(out.n * out.n, 0.0);
  const auto n = static_cast<std::ptrdiff_t>(out.n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    out.values[ui * out.n + ui] = 1.0;
    for (std::size_t j = ui + 1; j < out.n; ++j) {
      const double r = pair_correlation(c, ui, j);
      out.values[ui * out.n + j] = r;
      out.values[j * out.n + ui] = r;
    }
  }
  return out;
}

struct Candidate {
  double dist;
  std::size_t rank;  // position in row-key order
  std::size_t row;
};

bool closer(const Candidate& a, const Candidate& b) {
  return a.dist != b.dist ? a.dist < b.dist : a.rank < b.rank;
}

RankedFeatureList relief(const FeatureMatrix& m, const ReliefConfig& cfg, bool parallel) {
  const std::size_t n = m.rows(), p = m.cols();
  if (n < 2) throw InvalidInput("ReliefF needs at least 2 rows");
  if (cfg.k_neighbors < 1) throw InvalidInput("ReliefF k_neighbors must be >= 1");

  std::vector<double> scaled(n * p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double lo = m(0, j), hi = m(0, j);
    for (std::size_t r = 1; r < n; ++r) {
      lo = std::min(lo, m(r, j));
      hi = std::max(hi, m(r, j));
    }
    if (hi == lo) continue;
    for (std::size_t r = 0; r < n; ++r) scaled[r * p + j] = (m(r, j) - lo) / (hi - lo);
  }

  std::vector<std::size_t> by_key(n);
  std::iota(by_key.begin(), by_key.end(), 0);
  std::stable_sort(by_key.begin(), by_key.end(),
                   [&](std::size_t a, std::size_t b) { return m.row_keys()[a] < m.row_keys()[b]; });
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[by_key[i]] = i;

  const auto counts = m.class_counts();
  std::array<std::size_t, kNumGrades> kc{};
  std::size_t classes = 0;
  for (std::size_t c = 0; c < kNumGrades; ++c) {
    if (counts[c] == 0) continue;
    ++classes;
    if (counts[c] == 1)
      throw InvalidInput("ReliefF: class " + std::string(grade_name(kAllGrades[c])) +
                         " has a single row; cannot clamp k_neighbors");
    kc[c] = std::min(cfg.k_neighbors, counts[c] - 1);
    if (kc[c] < cfg.k_neighbors)
      log::warn("ReliefF: k_neighbors clamped to " + std::to_string(kc[c]) + " for class " +
                std::string(grade_name(kAllGrades[c])));
  }
  if (classes < 2) throw InvalidInput("ReliefF needs at least 2 classes");

  std::vector<std::size_t> label(n);
  for (std::size_t r = 0; r < n; ++r) label[r] = grade_index(m.labels()[r]);
  std::array<double, kNumGrades> prior{};
  for (std::size_t c = 0; c < kNumGrades; ++c) prior[c] = static_cast<double>(counts[c]) / static_cast<double>(n);

  std::vector<double> contrib(n * p, 0.0);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t si = 0; si < sn; ++si) {
    const auto r = static_cast<std::size_t>(si);
    const double* xr = &scaled[r * p];
    std::array<std::vector<Candidate>, kNumGrades> pool;
    for (std::size_t o = 0; o < n; ++o) {
      if (o == r) continue;
      const double* xo = &scaled[o * p];
      double d = 0.0;
      for (std::size_t j = 0; j < p; ++j) d += std::abs(xr[j] - xo[j]);
      pool[label[o]].push_back({d, rank[o], o});
    }
    double* out = &contrib[r * p];
    const std::size_t own = label[r];
    for (std::size_t c = 0; c < kNumGrades; ++c) {
      auto& cand = pool[c];
      if (cand.empty()) continue;
      const std::size_t k = std::min(kc[c], cand.size());
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), closer);
      const double scale =
          c == own ? -1.0 / static_cast<double>(k) : prior[c] / (1.0 - prior[own]) / static_cast<double>(k);
      for (std::size_t h = 0; h < k; ++h) {
        const double* xo = &scaled[cand[h].row * p];
        for (std::size_t j = 0; j < p; ++j) out[j] += scale * std::abs(xr[j] - xo[j]);
      }
    }
  }

  std::vector<double> w(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* c = &contrib[by_key[i] * p];
    for (std::size_t j = 0; j < p; ++j) w[j] += c[j];
  }
  for (double& v : w) v /= static_cast<double>(n);

  RankedFeatureList out;
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  for (auto j : order) out.order.push_back(m.columns()[j]);
  for (std::size_t j = 0; j < p; ++j) out.weights[m.columns()[j]] = w[j];
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw LoadError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

CorrelationMatrix correlation_matrix(const FeatureMatrix& m) { return correlate(m, true); }
CorrelationMatrix correlation_matrix_serial(const FeatureMatrix& m) { return correlate(m, false); }

PruneResult prune_correlated(const FeatureMatrix& m, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidInput("prune threshold must be in (0, 1]");
  const auto r = correlation_matrix(m);
  std::vector<bool> dropped(m.cols(), false);
  PruneResult out;
  for (std::size_t i = 0; i < m.cols(); ++i) {
    if (dropped[i]) continue;
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      if (dropped[j] || std::abs(r(i, j)) < threshold) continue;
      dropped[j] = true;
      out.pruned.push_back({m.columns()[j], m.columns()[i]});
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < m.cols(); ++j)
    if (!dropped[j]) keep.push_back(j);
  // Report pruned columns in column order.
  std::sort(out.pruned.begin(), out.pruned.end(), [&](const PrunedColumn& a, const PrunedColumn& b) {
    return m.column_index(a.name) < m.column_index(b.name);
  });
  out.kept = m.select_columns(keep);
  return out;
}

RankedFeatureList relieff_rank(const FeatureMatrix& m, const ReliefConfig& cfg) { return relief(m, cfg, true); }
RankedFeatureList relieff_rank_serial(const FeatureMatrix& m, const ReliefConfig& cfg) {
  return relief(m, cfg, false);
}

void write_ranking_csv(const RankedFeatureList& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "rank,name,weight,pruned_partner\n";
  for (std::size_t i = 0; i < r.order.size(); ++i)
    out << i + 1 << ',' << r.order[i] << ',' << format_double(r.weights.at(r.order[i])) << ",\n";
  for (const auto& p : r.pruned) out << ",," << p.name << ',' << p.partner << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

RankedFeatureList read_ranking_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("rank,name,weight,pruned_partner", 0) != 0)
    throw LoadError(path.string() + ": not a ranking file");
  RankedFeatureList r;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != 4) throw LoadError(where + ": expected 4 columns");
    if (cells[0].empty()) {
      // Pruned rows: ",,name,partner".
      r.pruned.push_back({cells[2], cells[3]});
    } else {
      if (std::stoul(cells[0]) != r.order.size() + 1) throw LoadError(where + ": ranks out of sequence");
      r.order.push_back(cells[1]);
      r.weights[cells[1]] = parse_double(cells[2], where);
    }
  }
  return r;
}

std::vector<std::vector<ChannelKind>> channel_combinations(ChannelFamily family) {
  std::vector<ChannelKind> ch;
  for (auto c : kAllChannels)
    if (channel_family(c) == family) ch.push_back(c);
  return {{ch[0]}, {ch[1]}, {ch[2]}, {ch[0], ch[1]}, {ch[0], ch[2]}, {ch[1], ch[2]}, {ch[0], ch[1], ch[2]}};
}

ChannelStudy assemble_channel_study(const Dataset& d, ChannelFamily family, std::span<const ChannelKind> combo,
                                    const StudyConfig& cfg, const feat::ProcessedSignals& signals,
                                    const seg::SegmentTable& segments) {
  if (combo.empty()) throw InvalidInput("channel combination is empty");
  for (auto c : combo)
    if (channel_family(c) != family)
      throw InvalidInput("channel " + std::string(channel_name(c)) + " is not in the " +
                         std::string(family_name(family)) + " family; combinations may not mix EMG and GRF");
  ChannelStudy s;
  s.combo.assign(combo.begin(), combo.end());
  s.extraction = feat::extract_matrix(d, combo, cfg.scheme, cfg.features, signals, segments, cfg.aggregation);
  auto pr = prune_correlated(s.extraction.matrix, cfg.prune_threshold);
  s.pruned = std::move(pr.kept);
  s.ranking = relieff_rank(s.pruned, cfg.relief);
  s.ranking.pruned = std::move(pr.pruned);
  return s;
}

const SearchEntry& SearchReport::best() const {
  for (const auto& e : entries)
    if (e.k == best_k) return e;
  throw InvalidInput("search report has no entry for K = " + std::to_string(best_k));
}

SearchReport incremental_search(const FeatureMatrix& m, const RankedFeatureList& ranked,
                                const SubsetEvaluator& evaluate, std::optional<std::size_t> max_k) {
  if (ranked.order.empty()) throw InvalidInput("incremental search needs at least one ranked feature");
  const std::size_t kmax = std::min(ranked.order.size(), max_k.value_or(ranked.order.size()));
  if (kmax == 0) throw InvalidInput("incremental search max_k must be >= 1");

  SearchReport rep;
  rep.entries.resize(kmax);
  std::vector<std::exception_ptr> errors(kmax);
  const auto n = static_cast<std::ptrdiff_t>(kmax);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& e = rep.entries[static_cast<std::size_t>(i)];
    e.k = static_cast<std::size_t>(i) + 1;
    e.features.assign(ranked.order.begin(), ranked.order.begin() + i + 1);
    try {
      e.metrics = evaluate(m.select_columns(std::span<const std::string>(e.features)));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  rep.best_k = 1;
  for (const auto& e : rep.entries)
    if (e.metrics.accuracy.mean > rep.best().metrics.accuracy.mean) rep.best_k = e.k;
  return rep;
}

}  // namespace dspn::sel
