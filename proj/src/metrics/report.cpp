#include <cstdio>
#include <sstream>

#include "recinv/error.hpp"
#include "recinv/metrics.hpp"

namespace recinv::metrics {
namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

class MeansBuilder {
 public:
  void add(const SampleScore& s) {
    ++count_;
    if (s.item_match) {
      item_sum_ += *s.item_match;
      ++item_n_;
    }
    if (s.profile_match_hit) {
      profile_hits_ += *s.profile_match_hit ? 1 : 0;
      ++profile_n_;
    }
    bleu_ += s.bleu;
    rouge_ += s.rouge_l;
    f1_ += s.token_f1;
  }

  MetricMeans build() const {
    MetricMeans m;
    m.count = count_;
    if (item_n_) m.item_match = item_sum_ / static_cast<double>(item_n_);
    if (profile_n_) m.profile_match = static_cast<double>(profile_hits_) / static_cast<double>(profile_n_);
    if (count_) {
      const double n = static_cast<double>(count_);
      m.bleu = bleu_ / n;
      m.rouge_l = rouge_ / n;
      m.token_f1 = f1_ / n;
    }
    return m;
  }

  std::size_t profile_total() const { return profile_n_; }
  std::size_t profile_correct() const { return profile_hits_; }

 private:
  std::size_t count_ = 0, item_n_ = 0, profile_n_ = 0, profile_hits_ = 0;
  double item_sum_ = 0.0, bleu_ = 0.0, rouge_ = 0.0, f1_ = 0.0;
};

}  // namespace

Json MetricMeans::to_json() const {
  return Json{{"count", count},
              {"item_match", optional_number(item_match)},
              {"profile_match", optional_number(profile_match)},
              {"bleu", bleu},
              {"rouge_l", rouge_l},
              {"token_f1", token_f1}};
}

Json EvalReport::to_json() const {
  Json samples = Json::array();
  for (const auto& s : per_sample) {
    samples.push_back({{"sample_id", s.sample_id},
                       {"n_items", s.n_items},
                       {"item_match", optional_number(s.item_match)},
                       {"profile_match", s.profile_match_hit ? Json(*s.profile_match_hit) : Json(nullptr)},
                       {"bleu", s.bleu},
                       {"rouge_l", s.rouge_l},
                       {"token_f1", s.token_f1}});
  }
  Json by_n = Json::object();
  for (const auto& [n, m] : by_item_count) by_n[std::to_string(n)] = m.to_json();
  return Json{{"aggregates", aggregates.to_json()},
              {"profile", {{"total", profile_total}, {"correct", profile_correct}}},
              {"bleu_variant", std::string(kBleuVariant)},
              {"excluded_empty_reference", excluded_empty_reference},
              {"positional_item_match", positional},
              {"by_item_count", by_n},
              {"per_sample", samples}};
}

std::string EvalReport::per_sample_csv() const {
  std::ostringstream out;
  out << "sample_id,n_items,item_match,profile_match,bleu,rouge_l,token_f1\n";
  for (const auto& s : per_sample) {
    out << csv_field(s.sample_id) << ',' << s.n_items << ',' << fmt(s.item_match) << ','
        << (s.profile_match_hit ? (*s.profile_match_hit ? "1" : "0") : "") << ',' << fmt(s.bleu)
        << ',' << fmt(s.rouge_l) << ',' << fmt(s.token_f1) << '\n';
  }
  return out.str();
}

std::string EvalReport::positional_csv() const {
  std::ostringstream out;
  out << "position,item_match\n";
  for (std::size_t p = 0; p < positional.size(); ++p) out << p + 1 << ',' << fmt(positional[p]) << '\n';
  return out.str();
}

std::string EvalReport::by_item_count_csv() const {
  std::ostringstream out;
  out << "n_items,count,item_match,profile_match,bleu,rouge_l,token_f1\n";
  for (const auto& [n, m] : by_item_count) {
    out << n << ',' << m.count << ',' << fmt(m.item_match) << ',' << fmt(m.profile_match) << ','
        << fmt(m.bleu) << ',' << fmt(m.rouge_l) << ',' << fmt(m.token_f1) << '\n';
  }
  return out.str();
}

EvalReport evaluate(std::span<const EvalPair> pairs) {
  EvalReport report;
  MeansBuilder all;
  std::map<int, MeansBuilder> by_n;
  std::vector<corpus::InstructionSample> samples;
  std::vector<ExtractionResult> extractions;
  samples.reserve(pairs.size());
  extractions.reserve(pairs.size());

  for (const auto& pair : pairs) {
    if (!pair.sample) throw Error("evaluate: pair without a sample");
    const auto& sample = *pair.sample;
    ExtractionResult ex = extract(pair.reconstructed);

    SampleScore s;
    s.sample_id = sample.sample_id;
    s.n_items = sample.n_items;
    s.item_match = item_match(sample.ground_truth_titles, ex.titles);
    if (!s.item_match) ++report.excluded_empty_reference;
    if (sample.has_profile) s.profile_match_hit = ex.profile && *ex.profile == sample.profile;
    s.bleu = bleu(sample.prompt, pair.reconstructed);
    s.rouge_l = rouge_l(sample.prompt, pair.reconstructed);
    s.token_f1 = token_f1(sample.prompt, pair.reconstructed);

    all.add(s);
    by_n[s.n_items].add(s);
    report.per_sample.push_back(std::move(s));
    samples.push_back(sample);
    extractions.push_back(std::move(ex));
  }

  report.aggregates = all.build();
  report.profile_total = all.profile_total();
  report.profile_correct = all.profile_correct();
  for (const auto& [n, b] : by_n) report.by_item_count[n] = b.build();
  report.positional = positional_item_match(samples, extractions);
  return report;
}

}  // namespace recinv::metrics
