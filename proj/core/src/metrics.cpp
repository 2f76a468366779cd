#include "surgcurate/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "surgcurate/error.hpp"

namespace surgcurate {

using detail::CsvReader;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open " + path.string());
  return in;
}

std::uint64_t parse_count(const std::string& text) {
  const Rational r = parse_rational(text);
  if (r.denominator() != 1 || r < 0) throw Error(ErrorCode::kParse, "bad count '" + text + "'");
  return static_cast<std::uint64_t>(r.numerator());
}

template <typename T>
void append_unique(std::vector<T>& v, const T& x) {
  if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

}  // namespace

std::vector<Prediction> parse_predictions_csv(std::istream& in) {
  CsvReader csv(in, {"sample_id", "predicted", "label"});
  const auto id = csv.index("sample_id");
  const auto pred = csv.index("predicted");
  const auto label = csv.index("label");
  std::vector<Prediction> out;
  for (std::vector<std::string> f; csv.next(f);) out.push_back({f[id], f[pred], f[label]});
  return out;
}

std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_predictions_csv(in);
}

Rational acc_at_1(const std::vector<Prediction>& predictions) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no samples to evaluate");
  const auto correct = std::count_if(predictions.begin(), predictions.end(),
                                     [](const Prediction& p) { return p.predicted == p.label; });
  return Rational(100 * static_cast<std::int64_t>(correct), static_cast<std::int64_t>(predictions.size()));
}

std::vector<ScoreRecord> parse_scores_csv(std::istream& in) {
  CsvReader csv(in, {"dataset", "model", "variant", "acc"});
  const bool counts = csv.has("n_samples") && csv.has("n_correct");
  std::vector<ScoreRecord> out;
  for (std::vector<std::string> f; csv.next(f);) {
    ScoreRecord r;
    r.dataset_id = f[csv.index("dataset")];
    r.model_id = f[csv.index("model")];
    r.variant = f[csv.index("variant")];
    r.acc = parse_rational(f[csv.index("acc")]);
    if (counts && !f[csv.index("n_samples")].empty() && !f[csv.index("n_correct")].empty()) {
      r.n_samples = parse_count(f[csv.index("n_samples")]);
      r.n_correct = parse_count(f[csv.index("n_correct")]);
      if (*r.n_samples == 0 || *r.n_correct > *r.n_samples) {
        throw Error(ErrorCode::kParse, "bad sample counts on line " + std::to_string(csv.line_no()));
      }
      const Rational exact(100 * static_cast<std::int64_t>(*r.n_correct),
                           static_cast<std::int64_t>(*r.n_samples));
      const Rational gap = exact > r.acc ? exact - r.acc : r.acc - exact;
      if (gap > Rational(5, 1000)) {
        throw Error(ErrorCode::kParse, "acc on line " + std::to_string(csv.line_no()) +
                                           " disagrees with its sample counts");
      }
      r.acc = exact;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_scores_csv(in);
}

void write_scores_csv(std::ostream& out, const std::vector<ScoreRecord>& scores) {
  out << "dataset,model,variant,acc,n_samples,n_correct\n";
  for (const auto& s : scores) {
    out << detail::csv_field(s.dataset_id) << ',' << detail::csv_field(s.model_id) << ','
        << detail::csv_field(s.variant) << ',' << format_fixed(s.acc, 2) << ','
        << (s.n_samples ? std::to_string(*s.n_samples) : "") << ','
        << (s.n_correct ? std::to_string(*s.n_correct) : "") << '\n';
  }
}

std::map<Domain, Rational> domain_macro(const std::map<std::string, Rational>& per_dataset,
                                        const DomainMap& mapping) {
  std::map<Domain, std::pair<Rational, std::int64_t>> sums;
  for (const auto& [dataset, score] : per_dataset) {
    auto& [sum, count] = sums[domain_of(dataset, mapping)];
    sum += score;
    ++count;
  }
  std::map<Domain, Rational> out;
  for (const auto& [domain, acc] : sums) out[domain] = acc.first / Rational(acc.second);
  return out;
}

Rational overall_macro(const std::map<Domain, Rational>& domain_scores) {
  Rational sum;
  for (auto d : kClinicalDomains) {
    auto it = domain_scores.find(d);
    if (it == domain_scores.end()) {
      throw Error(ErrorCode::kMissingDomain, "missing domain " + std::string(to_string(d)));
    }
    sum += it->second;
  }
  return sum / Rational(static_cast<std::int64_t>(kClinicalDomains.size()));
}

std::pair<Domain, Rational> worst_domain(const std::map<Domain, Rational>& domain_scores) {
  if (domain_scores.empty()) throw Error(ErrorCode::kMissingDomain, "no domain scores");
  auto best = domain_scores.begin();
  for (auto it = domain_scores.begin(); it != domain_scores.end(); ++it) {
    if (it->second < best->second ||
        (it->second == best->second && to_string(it->first) < to_string(best->first))) {
      best = it;
    }
  }
  return *best;
}

std::vector<PromptDelta> prompt_deltas(const std::vector<ScoreRecord>& scores, std::string_view p1,
                                       std::string_view p2) {
  using Key = std::pair<std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::optional<Rational>> first;
  std::map<Key, std::optional<Rational>> second;
  for (const auto& s : scores) {
    if (s.variant != p1 && s.variant != p2) continue;
    const Key key{s.dataset_id, s.model_id};
    append_unique(order, key);
    (s.variant == p1 ? first : second)[key] = s.acc;
  }
  std::vector<PromptDelta> out;
  for (const auto& key : order) {
    const auto a = first[key];
    const auto b = second[key];
    if (!a || !b) {
      throw Error(ErrorCode::kMissingVariant, "missing " + std::string(a ? p2 : p1) + " for " +
                                                   key.first + " / " + key.second);
    }
    out.push_back({key.first, key.second, *a, *b, prompt_delta(*a, *b)});
  }
  return out;
}

ScoreRow model_delta(const ScoreRow& a, const ScoreRow& b) {
  ScoreRow out;
  if (a.size() != b.size()) throw Error(ErrorCode::kColumnMismatch, "rows have different columns");
  for (const auto& [column, value] : a) {
    auto it = b.find(column);
    if (it == b.end()) throw Error(ErrorCode::kColumnMismatch, "column '" + column + "' missing");
    out[column] = value - it->second;
  }
  return out;
}

ScoreRow DomainReport::as_row() const {
  ScoreRow row;
  for (const auto& [domain, score] : domain_scores) row[std::string(to_string(domain))] = score;
  row["Overall Macro"] = overall_macro;
  row["Worst Domain"] = worst_score;
  return row;
}

DomainReport make_domain_report(std::string model_id, std::map<Domain, Rational> domain_scores) {
  std::map<Domain, Rational> clinical;
  for (auto d : kClinicalDomains) {
    if (auto it = domain_scores.find(d); it != domain_scores.end()) clinical[d] = it->second;
  }
  DomainReport r;
  r.model_id = std::move(model_id);
  r.overall_macro = overall_macro(clinical);
  std::tie(r.worst, r.worst_score) = worst_domain(clinical);
  r.domain_scores = std::move(clinical);
  return r;
}

DomainReport domain_report_from_datasets(std::string model_id,
                                         const std::map<std::string, Rational>& per_dataset,
                                         const DomainMap& mapping) {
  return make_domain_report(std::move(model_id), domain_macro(per_dataset, mapping));
}

std::vector<DomainReport> parse_domain_scores_csv(std::istream& in) {
  CsvReader csv(in, {"model", "domain", "score"});
  std::vector<std::string> order;
  std::map<std::string, std::map<Domain, Rational>> by_model;
  for (std::vector<std::string> f; csv.next(f);) {
    const auto& model = f[csv.index("model")];
    append_unique(order, model);
    by_model[model][parse_domain(f[csv.index("domain")])] = parse_rational(f[csv.index("score")]);
  }
  std::vector<DomainReport> out;
  for (const auto& model : order) out.push_back(make_domain_report(model, by_model[model]));
  return out;
}

std::vector<DomainReport> read_domain_scores_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_domain_scores_csv(in);
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  if (text == "csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kParse, "unknown report format '" + std::string(text) + "'");
}

ReportTable accuracy_table(const std::vector<ScoreRecord>& scores, std::string_view variant) {
  ReportTable t;
  t.title = variant.empty() ? "Acc@1 (%)" : "Acc@1 (%) [" + std::string(variant) + "]";
  t.row_header = "Dataset";
  t.bold_row_max = true;
  std::map<std::pair<std::string, std::string>, Rational> value;
  for (const auto& s : scores) {
    if (s.variant != variant) continue;
    append_unique(t.rows, s.dataset_id);
    append_unique(t.columns, s.model_id);
    value[{s.dataset_id, s.model_id}] = s.acc;
  }
  for (const auto& row : t.rows) {
    auto& cells = t.cells.emplace_back();
    for (const auto& col : t.columns) {
      auto it = value.find({row, col});
      cells.push_back(it == value.end() ? std::nullopt : std::optional<Rational>(it->second));
    }
  }
  return t;
}

ReportTable prompt_table(const std::vector<PromptDelta>& deltas) {
  ReportTable t;
  t.title = "Prompt sensitivity (delta = P2 - P1, points)";
  t.row_header = "Dataset";
  t.signed_values = true;
  std::vector<std::string> models;
  std::map<std::pair<std::string, std::string>, const PromptDelta*> index;
  for (const auto& d : deltas) {
    append_unique(t.rows, d.dataset_id);
    append_unique(models, d.model_id);
    index[{d.dataset_id, d.model_id}] = &d;
  }
  for (const auto& m : models) {
    t.columns.push_back(m + " P1");
    t.columns.push_back(m + " P2");
    t.columns.push_back(m + " delta");
  }
  for (const auto& row : t.rows) {
    auto& cells = t.cells.emplace_back();
    for (const auto& m : models) {
      auto it = index.find({row, m});
      if (it == index.end()) {
        cells.insert(cells.end(), 3, std::nullopt);
      } else {
        cells.push_back(it->second->p1);
        cells.push_back(it->second->p2);
        cells.push_back(it->second->delta);
      }
    }
  }
  return t;
}

ReportTable domain_table(const std::vector<DomainReport>& reports) {
  ReportTable t;
  t.title = "Domain macro Acc@1 (%)";
  t.row_header = "Model";
  t.columns = {"Cataract", "Robotic", "Endoscopy", "Laparoscopy", "Overall Macro", "Worst Domain"};
  for (const auto& r : reports) {
    t.rows.push_back(r.model_id);
    const ScoreRow row = r.as_row();
    auto& cells = t.cells.emplace_back();
    for (const auto& col : t.columns) {
      auto it = row.find(col);
      cells.push_back(it == row.end() ? std::nullopt : std::optional<Rational>(it->second));
    }
  }
  return t;
}

ReportTable delta_table(const std::vector<std::pair<std::string, ScoreRow>>& rows) {
  ReportTable t;
  t.title = "Deltas (points)";
  t.row_header = "Comparison";
  t.signed_values = true;
  for (const auto& [label, row] : rows) {
    for (const auto& [col, _] : row) append_unique(t.columns, col);
  }
  for (const auto& [label, row] : rows) {
    t.rows.push_back(label);
    auto& cells = t.cells.emplace_back();
    for (const auto& col : t.columns) {
      auto it = row.find(col);
      cells.push_back(it == row.end() ? std::nullopt : std::optional<Rational>(it->second));
    }
  }
  return t;
}

namespace {

void emit_markdown(std::ostream& out, const ReportTable& t) {
  out << "### " << t.title << "\n\n";
  out << "| " << t.row_header;
  for (const auto& c : t.columns) out << " | " << c;
  out << " |\n|---";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << "|---:";
  out << "|\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& cells = t.cells[r];
    std::optional<std::int64_t> best;
    if (t.bold_row_max) {
      for (const auto& c : cells) {
        if (c) best = std::max(best.value_or(round_scaled(*c, 2)), round_scaled(*c, 2));
      }
    }
    out << "| " << t.rows[r];
    for (const auto& c : cells) {
      out << " | ";
      if (!c) continue;
      const std::string text = format_fixed(*c, 2, t.signed_values);
      if (best && round_scaled(*c, 2) == *best) {
        out << "**" << text << "**";
      } else {
        out << text;
      }
    }
    out << " |\n";
  }
}

void emit_csv(std::ostream& out, const ReportTable& t) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const auto& cell = t.cells[r][c];
      if (!cell) continue;
      out << detail::csv_field(t.title) << ',' << detail::csv_field(t.rows[r]) << ','
          << detail::csv_field(t.columns[c]) << ',' << format_fixed(*cell, 2, t.signed_values) << '\n';
    }
  }
}

}  // namespace

std::string emit_report(const std::vector<ReportTable>& tables, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) out << "table,row,column,value\n";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (format == ReportFormat::kMarkdown) {
      if (i > 0) out << '\n';
      emit_markdown(out, tables[i]);
    } else {
      emit_csv(out, tables[i]);
    }
  }
  return out.str();
}

}  // namespace surgcurate
