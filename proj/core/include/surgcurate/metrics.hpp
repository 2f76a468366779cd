#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "surgcurate/corpus.hpp"
#include "surgcurate/rational.hpp"

namespace surgcurate {

// Scores are percentages held as exact rationals; rounding to two decimals
// happens only when rendering.

struct Prediction {
  std::string sample_id;
  std::string predicted;
  std::string label;
};

// CSV with header sample_id,predicted,label.
std::vector<Prediction> read_predictions_csv(const std::filesystem::path& path);
std::vector<Prediction> parse_predictions_csv(std::istream& in);

// 100 * correct / total. Throws EmptyEvaluation.
Rational acc_at_1(const std::vector<Prediction>& predictions);

struct ScoreRecord {
  std::string dataset_id;
  std::string model_id;
  std::string variant;  // e.g. "P1", "P2"; empty when not a prompt variant
  Rational acc;
  std::optional<std::uint64_t> n_samples;
  std::optional<std::uint64_t> n_correct;
};

// CSV with header dataset,model,variant,acc[,n_samples,n_correct]. When both
// counts are present, acc must agree with them within 0.005 points and the
// exact ratio is kept.
std::vector<ScoreRecord> parse_scores_csv(std::istream& in);
std::vector<ScoreRecord> read_scores_csv(const std::filesystem::path& path);
void write_scores_csv(std::ostream& out, const std::vector<ScoreRecord>& scores);

// Unweighted mean of member-dataset scores per domain. Throws UnknownDataset.
std::map<Domain, Rational> domain_macro(const std::map<std::string, Rational>& per_dataset,
                                        const DomainMap& mapping);

// Mean over the four clinical domains (other domains are ignored). Throws
// MissingDomain.
Rational overall_macro(const std::map<Domain, Rational>& domain_scores);

// Minimum score; ties go to the alphabetically first domain name.
std::pair<Domain, Rational> worst_domain(const std::map<Domain, Rational>& domain_scores);

inline Rational prompt_delta(const Rational& p1, const Rational& p2) { return p2 - p1; }

struct PromptDelta {
  std::string dataset_id;
  std::string model_id;
  Rational p1;
  Rational p2;
  Rational delta;
};

// Pairs P1/P2 records per (dataset, model). Throws MissingVariant when one
// side is absent.
std::vector<PromptDelta> prompt_deltas(const std::vector<ScoreRecord>& scores,
                                       std::string_view p1 = "P1", std::string_view p2 = "P2");

using ScoreRow = std::map<std::string, Rational>;

// a - b per column. Throws ColumnMismatch unless both rows have the same
// columns.
ScoreRow model_delta(const ScoreRow& a, const ScoreRow& b);

struct DomainReport {
  std::string model_id;
  std::map<Domain, Rational> domain_scores;
  Rational overall_macro;
  Domain worst = Domain::kCataract;
  Rational worst_score;

  // Domain columns plus "Overall Macro" and "Worst Domain".
  ScoreRow as_row() const;
};

DomainReport make_domain_report(std::string model_id, std::map<Domain, Rational> domain_scores);

// Per-dataset scores -> domain macro -> report.
DomainReport domain_report_from_datasets(std::string model_id,
                                         const std::map<std::string, Rational>& per_dataset,
                                         const DomainMap& mapping);

// CSV with header model,domain,score (published domain-level numbers).
std::vector<DomainReport> read_domain_scores_csv(const std::filesystem::path& path);
std::vector<DomainReport> parse_domain_scores_csv(std::istream& in);

enum class ReportFormat { kMarkdown, kCsv };
ReportFormat parse_report_format(std::string_view text);

struct ReportTable {
  std::string title;
  std::string row_header;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<Rational>>> cells;  // [row][column]
  bool signed_values = false;
  bool bold_row_max = false;
};

// Datasets x models for one variant (Acc@1 layout).
ReportTable accuracy_table(const std::vector<ScoreRecord>& scores, std::string_view variant = "");
// Datasets x (model P1, P2, delta).
ReportTable prompt_table(const std::vector<PromptDelta>& deltas);
// Models x (four domains, Overall Macro, Worst Domain).
ReportTable domain_table(const std::vector<DomainReport>& reports);
// One signed row per (label, a, b) comparison.
ReportTable delta_table(const std::vector<std::pair<std::string, ScoreRow>>& rows);

// Markdown: one pipe table per section with per-row maxima bolded (all tied
// maxima) where enabled. CSV: long format table,row,column,value.
std::string emit_report(const std::vector<ReportTable>& tables, ReportFormat format);

}  // namespace surgcurate
