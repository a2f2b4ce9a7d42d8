#include "dean/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dean/error.hpp"
#include "dean/rng.hpp"

namespace dean {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(Errc::IoError, "double formatting failed");
  return std::string(buf, ptr);
}

MetricsReport score_metrics(const std::vector<LabelRecord>& pred,
                            const std::vector<LabelRecord>& gold,
                            const RubricSpec& rubric) {
  if (pred.empty() || gold.empty())
    throw Error(Errc::EmptyInput, "score_metrics: empty label set");
  if (pred.size() != gold.size())
    throw Error(Errc::MisalignedIds, "score_metrics: pred and gold differ in size");

  std::map<std::string, const LabelRecord*> gold_by_id;
  for (const auto& g : gold) {
    validate_label(g, rubric);
    if (!gold_by_id.emplace(g.feedback_id, &g).second)
      throw Error(Errc::MisalignedIds,
                  "score_metrics: duplicate gold feedback_id '" + g.feedback_id + "'");
  }

  std::vector<std::pair<const LabelRecord*, const LabelRecord*>> pairs;
  pairs.reserve(pred.size());
  for (const auto& p : pred) {
    validate_label(p, rubric);
    auto it = gold_by_id.find(p.feedback_id);
    if (it == gold_by_id.end())
      throw Error(Errc::MisalignedIds,
                  "score_metrics: pred feedback_id '" + p.feedback_id + "' has no gold");
    pairs.emplace_back(&p, it->second);
  }

  MetricsReport report;
  std::map<Aspect, std::vector<const DimensionMetrics*>> aspect_members;

  for (const auto& dim : rubric.dimensions()) {
    std::size_t matches = 0;
    // confusion[c] = (tp, fp, fn) for class c
    std::map<int, std::array<std::size_t, 3>> confusion;
    for (int c : valid_scores(dim.scale)) confusion[c] = {0, 0, 0};

    std::set<int> observed;
    for (const auto& [p, g] : pairs) {
      const int pv = p->scores.at(dim.id);
      const int gv = g->scores.at(dim.id);
      observed.insert(pv);
      observed.insert(gv);
      if (pv == gv) {
        ++matches;
        ++confusion[pv][0];
      } else {
        ++confusion[pv][1];
        ++confusion[gv][2];
      }
    }

    DimensionMetrics m;
    m.support = pairs.size();
    m.accuracy = static_cast<double>(matches) / static_cast<double>(pairs.size());
    // Macro-F1 over classes observed in pred or gold; absent classes are
    // excluded from the mean rather than counted as zero.
    double f1_sum = 0.0;
    for (int c : observed) {
      const auto& [tp, fp, fn] = confusion[c];
      const double denom = static_cast<double>(2 * tp + fp + fn);
      f1_sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    m.macro_f1 = observed.empty() ? 0.0 : f1_sum / static_cast<double>(observed.size());

    auto [it, inserted] = report.per_dimension.emplace(dim.id, m);
    (void)inserted;
    aspect_members[dim.aspect].push_back(&it->second);
  }

  auto mean_over = [](const std::vector<const DimensionMetrics*>& members) {
    AspectMetrics out;
    for (const auto* m : members) {
      out.accuracy += m->accuracy;
      out.macro_f1 += m->macro_f1;
    }
    const auto n = static_cast<double>(members.size());
    if (n > 0) {
      out.accuracy /= n;
      out.macro_f1 /= n;
    }
    return out;
  };

  std::vector<const DimensionMetrics*> all;
  for (const auto& [aspect, members] : aspect_members) {
    report.per_aspect[aspect] = mean_over(members);
    all.insert(all.end(), members.begin(), members.end());
  }
  report.overall = mean_over(all);
  return report;
}

void AgreementInput::validate() const {
  if (counts.empty()) throw Error(Errc::EmptyInput, "agreement matrix has no items");
  if (raters_per_item < 2)
    throw Error(Errc::MalformedConfig, "agreement requires >= 2 raters per item");
  const std::size_t categories = counts.front().size();
  if (categories == 0)
    throw Error(Errc::MalformedConfig, "agreement matrix has no categories");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != categories)
      throw Error(Errc::MalformedConfig,
                  "agreement matrix row " + std::to_string(i) + " has ragged width");
    int sum = 0;
    for (int v : counts[i]) {
      if (v < 0)
        throw Error(Errc::MalformedConfig,
                    "agreement matrix row " + std::to_string(i) + " has negative count");
      sum += v;
    }
    if (sum != raters_per_item)
      throw Error(Errc::MalformedConfig,
                  "agreement matrix row " + std::to_string(i) + " sums to " +
                      std::to_string(sum) + ", expected " +
                      std::to_string(raters_per_item));
  }
}

double fleiss_kappa(const AgreementInput& input) {
  input.validate();
  const auto n_items = static_cast<double>(input.counts.size());
  const auto n_raters = static_cast<double>(input.raters_per_item);
  const std::size_t categories = input.counts.front().size();

  // Degenerate when every rating lands in one category: expected agreement
  // is exactly 1 and kappa is undefined. Checked on the integer column
  // sums, not on floats.
  std::size_t used_categories = 0;
  std::vector<long long> column_sums(categories, 0);
  for (const auto& row : input.counts)
    for (std::size_t j = 0; j < categories; ++j) column_sums[j] += row[j];
  for (long long s : column_sums)
    if (s > 0) ++used_categories;
  if (used_categories <= 1)
    throw Error(Errc::DegenerateAgreement,
                "all raters used a single category; expected agreement is 1");

  double p_bar = 0.0;
  for (const auto& row : input.counts) {
    double sq = 0.0;
    for (int v : row) sq += static_cast<double>(v) * static_cast<double>(v);
    p_bar += (sq - n_raters) / (n_raters * (n_raters - 1.0));
  }
  p_bar /= n_items;

  double pe_bar = 0.0;
  for (long long s : column_sums) {
    const double pj = static_cast<double>(s) / (n_items * n_raters);
    pe_bar += pj * pj;
  }
  return (p_bar - pe_bar) / (1.0 - pe_bar);
}

const char* score_selector_name(ScoreSelector s) {
  switch (s) {
    case ScoreSelector::Overall: return "overall";
    case ScoreSelector::Content: return "content";
    case ScoreSelector::Effectiveness: return "effectiveness";
  }
  return "overall";
}

IntervalEstimate mean_likert(const std::vector<EvaluationResult>& evaluations,
                             ScoreSelector selector, int n_resamples,
                             std::uint64_t seed) {
  if (evaluations.empty()) throw Error(Errc::EmptyInput, "mean_likert: no evaluations");
  if (n_resamples < 1)
    throw Error(Errc::MalformedConfig, "mean_likert: n_resamples must be >= 1");

  std::vector<double> values;
  values.reserve(evaluations.size());
  for (const auto& e : evaluations) {
    switch (selector) {
      case ScoreSelector::Overall: values.push_back(e.overall_quality); break;
      case ScoreSelector::Content: values.push_back(e.content_mean); break;
      case ScoreSelector::Effectiveness: values.push_back(e.effectiveness_mean); break;
    }
  }

  const auto n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);

  Rng rng(seed);
  std::vector<double> resample_means;
  resample_means.reserve(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[rng.below(n)];
    resample_means.push_back(sum / static_cast<double>(n));
  }
  std::sort(resample_means.begin(), resample_means.end());

  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(resample_means.size() - 1);
    const auto lo_idx = static_cast<std::size_t>(std::floor(pos));
    const auto hi_idx = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return resample_means[lo_idx] * (1.0 - frac) + resample_means[hi_idx] * frac;
  };

  IntervalEstimate est;
  est.mean = mean;
  est.lo = std::min(quantile(0.025), mean);
  est.hi = std::max(quantile(0.975), mean);
  est.n_resamples = n_resamples;
  est.seed = seed;
  return est;
}

HallucinationRates hallucination_rates(const std::vector<EvaluationResult>& evaluations,
                                       const RubricSpec& rubric) {
  if (evaluations.empty())
    throw Error(Errc::EmptyInput, "hallucination_rates: no evaluations");
  HallucinationRates rates;
  const auto dims = rubric.by_aspect(Aspect::Hallucination);
  for (const auto* dim : dims) {
    std::size_t flagged = 0;
    for (const auto& e : evaluations)
      if (e.hallucination_flags.count(dim->id)) ++flagged;
    rates.per_type[dim->id] =
        static_cast<double>(flagged) / static_cast<double>(evaluations.size());
  }
  double sum = 0.0;
  for (const auto& [id, rate] : rates.per_type) sum += rate;
  rates.mean_of_types =
      rates.per_type.empty() ? 0.0 : sum / static_cast<double>(rates.per_type.size());
  return rates;
}

namespace {

constexpr const char* kCsvHeader =
    "evaluator,overall_accuracy,overall_f1,content_accuracy,content_f1,"
    "effectiveness_accuracy,effectiveness_f1,hallucinations_accuracy,"
    "hallucinations_f1";

AspectMetrics aspect_or_zero(const MetricsReport& r, Aspect a) {
  auto it = r.per_aspect.find(a);
  return it == r.per_aspect.end() ? AspectMetrics{} : it->second;
}

}  // namespace

std::string render_metrics_csv(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& [evaluator, report] : rows) {
    const auto content = aspect_or_zero(report, Aspect::Content);
    const auto effectiveness = aspect_or_zero(report, Aspect::Effectiveness);
    const auto hallucinations = aspect_or_zero(report, Aspect::Hallucination);
    out << evaluator << ',' << format_double(report.overall.accuracy) << ','
        << format_double(report.overall.macro_f1) << ','
        << format_double(content.accuracy) << ',' << format_double(content.macro_f1)
        << ',' << format_double(effectiveness.accuracy) << ','
        << format_double(effectiveness.macro_f1) << ','
        << format_double(hallucinations.accuracy) << ','
        << format_double(hallucinations.macro_f1) << '\n';
  }
  return out.str();
}

std::vector<std::pair<std::string, MetricsReport>> parse_metrics_csv(
    const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw Error(Errc::MalformedConfig, "metrics CSV: unexpected header");

  std::vector<std::pair<std::string, MetricsReport>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream cells_in(line);
    std::string cell;
    while (std::getline(cells_in, cell, ',')) cells.push_back(cell);
    if (cells.size() != 9)
      throw Error(Errc::MalformedConfig, "metrics CSV: row with " +
                                             std::to_string(cells.size()) + " cells");
    auto num = [&](std::size_t i) {
      try {
        return std::stod(cells[i]);
      } catch (const std::exception&) {
        throw Error(Errc::MalformedConfig, "metrics CSV: non-numeric cell '" + cells[i] + "'");
      }
    };
    MetricsReport r;
    r.overall = {num(1), num(2)};
    r.per_aspect[Aspect::Content] = {num(3), num(4)};
    r.per_aspect[Aspect::Effectiveness] = {num(5), num(6)};
    r.per_aspect[Aspect::Hallucination] = {num(7), num(8)};
    rows.emplace_back(cells[0], std::move(r));
  }
  return rows;
}

std::string metrics_report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json dims;
  for (const auto& [id, m] : report.per_dimension)
    dims[id] = {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"support", m.support}};
  j["per_dimension"] = std::move(dims);
  nlohmann::ordered_json aspects;
  for (const auto& [aspect, m] : report.per_aspect)
    aspects[aspect_name(aspect)] = {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}};
  j["per_aspect"] = std::move(aspects);
  j["overall"] = {{"accuracy", report.overall.accuracy},
                  {"macro_f1", report.overall.macro_f1}};
  return j.dump(2) + "\n";
}

}  // namespace dean
