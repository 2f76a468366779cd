#include "surgcurate_app/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "surgcurate/batch_mixer.hpp"
#include "surgcurate/config.hpp"
#include "surgcurate/corpus.hpp"
#include "surgcurate/curation.hpp"
#include "surgcurate/embedding_store.hpp"
#include "surgcurate/error.hpp"
#include "surgcurate/kmeans.hpp"
#include "surgcurate/metrics.hpp"
#include "surgcurate/parallel.hpp"
#include "surgcurate/random.hpp"
#include "surgcurate/run_manifest.hpp"
#include "surgcurate/splits.hpp"

namespace surgcurate::app {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::vector<std::string> args;
  std::string command;
  ResolvedConfig config;
  RunManifest manifest;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::uint64_t seed(const std::string& stage) {
    const auto s = derive_seed(config.get_uint("run.seed"), stage);
    manifest.seeds[stage] = s;
    return s;
  }

  void input(const std::string& role, const fs::path& path) {
    require_file(path);
    manifest.inputs.push_back(fingerprint_file(role, path));
  }

  static void require_file(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::kInputMissing, "input not found: " + path.string());
  }

  // Fingerprints the artifact and writes its sidecar run manifest.
  void finish(const std::string& role, const fs::path& artifact) {
    manifest.outputs.push_back(fingerprint_file(role, artifact));
    manifest.finished_at = utc_timestamp();
    write_run_manifest(run_manifest_path(artifact), manifest);
  }
};

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_output(const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInputMissing, "cannot open " + path.string());
  std::vector<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::map<std::string, std::string> read_strata(const fs::path& path) {
  std::map<std::string, std::string> strata;
  for (const auto& line : read_id_list(path)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::kParse, "expected video_id,label: " + line);
    const auto id = line.substr(0, comma);
    if (id == "video_id") continue;
    strata[id] = line.substr(comma + 1);
  }
  return strata;
}

EmbeddingMatrix load_points(Invocation& inv, const fs::path& store, bool normalize) {
  inv.input("store", store);
  auto matrix = read_store(store);
  return normalize ? l2_normalize(matrix) : matrix;
}

KMeansOptions kmeans_options(const ResolvedConfig& c, const WorkerPool* pool) {
  KMeansOptions o;
  o.tol = c.get_real("cluster.tol");
  o.max_iter = c.get_uint("cluster.max_iter");
  o.n_init = c.get_uint("cluster.n_init");
  o.local_trials = c.get_uint("cluster.local_trials");
  o.chunk_size = c.get_uint("cluster.chunk_size");
  o.pool = pool;
  return o;
}

// Subcommand option holders.
struct IngestArgs {
  std::string blobs, ids, out, corpus;
  std::size_t dim = kDefaultEmbeddingDim;
};
struct ClusterArgs {
  std::string store, out;
};
struct CurateArgs {
  std::string store, tree, out;
};
struct SampleArgs {
  std::string curated, unlabeled, clinical, out;
};
struct SplitArgs {
  std::string corpus, dataset, out, official, community, created_at;
};
struct VerifyArgs {
  std::string manifest, corpus;
};
struct EvaluateArgs {
  std::string predictions, dataset, model, variant, out;
  bool append = false;
};
struct ReportArgs {
  std::vector<std::string> scores;
  std::string domain_scores, domain_map, format = "markdown", out;
  std::vector<std::string> deltas;
};
struct StatsArgs {
  std::string corpus, out;
};

void do_ingest(Invocation& inv, const IngestArgs& a) {
  Invocation::require_file(a.blobs);
  inv.input("ids", a.ids);
  auto matrix = ingest_raw(a.blobs, a.ids, a.dim);
  if (!a.corpus.empty()) {
    inv.input("corpus", a.corpus);
    const auto manifest = read_manifest(a.corpus);
    const CorpusIndex index(manifest);
    const auto report = validate_corpus(index);
    for (const auto& w : report.warnings) *inv.err << "warning: " << w.record_id << ": " << w.message << '\n';
    if (!report.ok()) {
      const auto& v = report.violations.front();
      throw Error(ErrorCode::kParse, std::to_string(report.violations.size()) +
                                         " corpus violation(s); first: " + v.record_id + ": " + v.message);
    }
    const auto missing = unresolved_rows(matrix, index);
    if (!missing.empty()) {
      throw Error(ErrorCode::kParse, std::to_string(missing.size()) +
                                         " embedding row(s) do not resolve to a clip; first: " + missing.front());
    }
  }
  ensure_parent(a.out);
  write_store(matrix, a.out);
  inv.finish("store", a.out);
  *inv.out << "ingested " << matrix.rows() << " rows x " << matrix.dim() << " -> " << a.out << '\n';
}

void do_cluster(Invocation& inv, const ClusterArgs& a) {
  const auto& c = inv.config;
  const bool normalize = c.get_bool("cluster.normalize");
  const auto points = load_points(inv, a.store, normalize);
  const WorkerPool pool(c.get_uint("run.threads"));
  const auto levels = c.get_levels("cluster.levels");
  const auto order = canonical_order(points.row_ids());
  const auto tree = build_hierarchy(points.view(), levels, inv.seed("cluster"), kmeans_options(c, &pool),
                                    order, normalize);
  ensure_parent(a.out);
  write_tree(tree, a.out);
  inv.finish("tree", a.out);
  *inv.out << "clustered " << points.rows() << " rows into levels " << c.text("cluster.levels") << " -> "
           << a.out << '\n';
}

void do_curate(Invocation& inv, const CurateArgs& a) {
  const auto& c = inv.config;
  inv.input("tree", a.tree);
  const auto tree = read_tree(a.tree);
  const auto points = load_points(inv, a.store, tree.normalized);
  const WorkerPool pool(c.get_uint("run.threads"));
  const auto set = curate(tree, points, c.get_rational("curate.fraction"),
                          parse_allocation_mode(c.text("curate.allocation")), &pool);
  ensure_parent(a.out);
  write_curated(fs::path(a.out), set);
  inv.finish("curated", a.out);
  *inv.out << "curated " << set.entries.size() << " of " << points.rows() << " clips -> " << a.out << '\n';
}

void do_sample(Invocation& inv, const SampleArgs& a) {
  const auto& c = inv.config;
  if (a.curated.empty() == a.unlabeled.empty()) {
    throw Error(ErrorCode::kConfigError, "sample needs exactly one of --curated or --unlabeled");
  }
  std::vector<std::string> unlabeled;
  if (!a.curated.empty()) {
    inv.input("curated", a.curated);
    unlabeled = read_curated(a.curated).clip_ids();
  } else {
    inv.input("unlabeled", a.unlabeled);
    unlabeled = read_id_list(a.unlabeled);
  }
  inv.input("clinical", a.clinical);
  auto clinical = read_id_list(a.clinical);

  MixPolicy policy;
  policy.p_pure_clinical = c.get_rational("sample.p_pure");
  policy.mixed_unlabeled_frac = c.get_rational("sample.mix");
  const auto batch = c.get_uint("sample.batch");
  if (batch == 0 || batch > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidPolicy, "batch size must be in [1, 2^32)");
  }
  policy.batch_size = static_cast<std::uint32_t>(batch);
  policy.schedule = parse_schedule(c.text("sample.schedule"));
  policy.seed = inv.seed("sample");
  policy.validate();

  const auto n = c.get_uint("sample.n");
  BatchStream stream(std::move(unlabeled), std::move(clinical), policy);
  auto out = open_output(a.out);
  write_batch_header(out, policy, n);
  for (std::uint64_t i = 0; i < n; ++i) write_batch_line(out, stream.next());
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + a.out);
  inv.finish("batches", a.out);
  *inv.out << "sampled " << n << " batches -> " << a.out << '\n';
}

std::string created_at_for(Invocation& inv, const SplitArgs& a) {
  std::string created = a.created_at;
  if (created.empty()) {
    created = utc_timestamp();
    inv.manifest.argv.push_back("--created-at");
    inv.manifest.argv.push_back(created);
  }
  return created;
}

void do_split(Invocation& inv, const SplitArgs& a) {
  const auto& c = inv.config;
  inv.input("corpus", a.corpus);
  const auto corpus = read_manifest(a.corpus);
  std::vector<std::string> videos;
  for (const auto& v : corpus.videos) {
    if (v.dataset_id == a.dataset) videos.push_back(v.video_id);
  }
  std::optional<SplitAssignment> official, community;
  if (!a.official.empty()) {
    inv.input("official", a.official);
    official = read_assignment_file(a.official);
  }
  if (!a.community.empty()) {
    inv.input("community", a.community);
    community = read_assignment_file(a.community);
  }
  const auto ratios = parse_ratios(c.text("split.ratios"));
  const auto seed = inv.seed("split:" + a.dataset);
  std::vector<std::string> warnings;
  SplitManifest manifest;
  const auto& strata_file = c.text("split.stratify_by");
  if (!strata_file.empty() && !official && !community) {
    inv.input("strata", strata_file);
    const auto strata = read_strata(strata_file);
    auto split = ratio_split(videos, ratios, seed, &strata);
    manifest.dataset_id = a.dataset;
    manifest.tier = SplitTier::kOurs;
    manifest.assignment = std::move(split.assignment);
    manifest.seed = seed;
    manifest.ratios = ratios;
    manifest.created_at = created_at_for(inv, a);
    manifest.version = version_manifest(manifest);
    warnings = std::move(split.warnings);
  } else {
    manifest = resolve_manifest(a.dataset, videos, official, community, ratios, seed, created_at_for(inv, a),
                                &warnings);
  }
  for (const auto& w : warnings) *inv.err << "warning: " << w << '\n';
  ensure_parent(a.out);
  write_split_manifest(a.out, manifest);
  inv.finish("split", a.out);
  *inv.out << a.dataset << ": " << to_string(manifest.tier) << " split " << manifest.assignment[SplitName::kTrain].size()
           << '/' << manifest.assignment[SplitName::kVal].size() << '/' << manifest.assignment[SplitName::kTest].size()
           << " version " << manifest.version << " -> " << a.out << '\n';
}

bool do_split_verify(Invocation& inv, const VerifyArgs& a) {
  inv.input("split", a.manifest);
  inv.input("corpus", a.corpus);
  const auto manifest = read_split_manifest(a.manifest);
  const auto corpus = read_manifest(a.corpus);
  const auto violations = verify_disjoint(manifest, CorpusIndex(corpus));
  for (const auto& v : violations) *inv.out << "violation: " << v.video_id << ": " << v.message << '\n';
  if (violations.empty()) *inv.out << "ok: " << manifest.dataset_id << " " << manifest.version << '\n';
  return violations.empty();
}

void do_evaluate(Invocation& inv, const EvaluateArgs& a) {
  inv.input("predictions", a.predictions);
  const auto predictions = read_predictions_csv(a.predictions);
  const auto acc = acc_at_1(predictions);
  std::vector<ScoreRecord> scores;
  if (a.append && fs::exists(a.out)) scores = read_scores_csv(a.out);
  const auto correct = std::count_if(predictions.begin(), predictions.end(),
                                     [](const Prediction& p) { return p.predicted == p.label; });
  scores.push_back({a.dataset, a.model, a.variant, acc, predictions.size(), static_cast<std::uint64_t>(correct)});
  {
    auto out = open_output(a.out);
    write_scores_csv(out, scores);
  }
  inv.finish("scores", a.out);
  *inv.out << a.dataset << " / " << a.model << (a.variant.empty() ? "" : " / " + a.variant)
           << ": Acc@1 " << format_fixed(acc, 2) << " (" << correct << '/' << predictions.size() << ")\n";
}

void do_report(Invocation& inv, const ReportArgs& a) {
  const auto format = parse_report_format(a.format);
  std::vector<ScoreRecord> scores;
  for (const auto& path : a.scores) {
    inv.input("scores", path);
    auto more = read_scores_csv(path);
    scores.insert(scores.end(), more.begin(), more.end());
  }
  std::vector<ReportTable> tables;
  std::vector<std::string> variants;
  bool has_p1 = false, has_p2 = false;
  for (const auto& s : scores) {
    has_p1 |= s.variant == "P1";
    has_p2 |= s.variant == "P2";
    if (s.variant != "P1" && s.variant != "P2" &&
        std::find(variants.begin(), variants.end(), s.variant) == variants.end()) {
      variants.push_back(s.variant);
    }
  }
  for (const auto& v : variants) tables.push_back(accuracy_table(scores, v));
  if (has_p1 && has_p2) tables.push_back(prompt_table(prompt_deltas(scores)));

  std::vector<DomainReport> reports;
  if (!a.domain_scores.empty()) {
    inv.input("domain_scores", a.domain_scores);
    reports = read_domain_scores_csv(a.domain_scores);
  } else if (!scores.empty()) {
    DomainMap mapping = DomainMap::builtin();
    if (!a.domain_map.empty()) {
      inv.input("domain_map", a.domain_map);
      mapping = DomainMap::load(a.domain_map);
    }
    const std::string main_variant = variants.empty() ? "" : variants.front();
    std::vector<std::string> models;
    std::map<std::string, std::map<std::string, Rational>> per_model;
    for (const auto& s : scores) {
      if (s.variant != main_variant) continue;
      if (std::find(models.begin(), models.end(), s.model_id) == models.end()) models.push_back(s.model_id);
      per_model[s.model_id][s.dataset_id] = s.acc;
    }
    try {
      for (const auto& m : models) reports.push_back(domain_report_from_datasets(m, per_model[m], mapping));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kMissingDomain && e.code() != ErrorCode::kUnknownDataset) throw;
      *inv.err << "note: domain table skipped: " << e.what() << '\n';
      reports.clear();
    }
  }
  if (!reports.empty()) tables.push_back(domain_table(reports));

  if (!a.deltas.empty()) {
    std::map<std::string, ScoreRow> rows;
    for (const auto& r : reports) rows[r.model_id] = r.as_row();
    std::vector<std::pair<std::string, ScoreRow>> delta_rows;
    for (const auto& spec : a.deltas) {
      const auto comma = spec.find(',');
      if (comma == std::string::npos) throw Error(ErrorCode::kConfigError, "--delta expects A,B: " + spec);
      const auto lhs = spec.substr(0, comma), rhs = spec.substr(comma + 1);
      if (!rows.contains(lhs) || !rows.contains(rhs)) {
        throw Error(ErrorCode::kColumnMismatch, "no domain row for " + (rows.contains(lhs) ? rhs : lhs));
      }
      delta_rows.emplace_back(lhs + " - " + rhs, model_delta(rows[lhs], rows[rhs]));
    }
    tables.push_back(delta_table(delta_rows));
  }

  const auto text = emit_report(tables, format);
  if (a.out.empty()) {
    *inv.out << text;
    return;
  }
  {
    auto out = open_output(a.out);
    out << text;
  }
  inv.finish("report", a.out);
}

void do_stats(Invocation& inv, const StatsArgs& a) {
  inv.input("corpus", a.corpus);
  const auto text = render_inventory_markdown(corpus_stats(read_manifest(a.corpus)));
  if (a.out.empty()) {
    *inv.out << text;
    return;
  }
  {
    auto out = open_output(a.out);
    out << text;
  }
  inv.finish("inventory", a.out);
}

bool is_usage_error(ErrorCode code) {
  return code == ErrorCode::kConfigError || code == ErrorCode::kInputMissing;
}

void report_error(std::ostream& err, const std::string& command, const std::string& code, const std::string& msg) {
  nlohmann::json record = {{"error", code}, {"message", msg}};
  if (!command.empty()) record["command"] = command;
  err << record.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App cli{"Surgical video pretraining data-recipe engine", "surgcurate"};
  cli.require_subcommand(1);
  cli.fallthrough();
  cli.set_version_flag("--version", std::string(tool_version()));

  std::string config_file;
  cli.add_option("--config", config_file, "INI config file ([section] key = value)");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const auto& k : config_registry()) {
    flag_options[k.key] = cli.add_option(k.flag(), flag_values[k.key], k.help + " [" + k.key + "]")
                              ->default_str(k.default_value)
                              ->group("Config");
  }

  IngestArgs ingest;
  auto* c_ingest = cli.add_subcommand("ingest", "Build an embedding store from raw f32 blobs");
  c_ingest->add_option("--blobs", ingest.blobs, "directory of *.f32 blobs")->required();
  c_ingest->add_option("--ids", ingest.ids, "row ids, one per line")->required();
  c_ingest->add_option("--dim", ingest.dim, "embedding dimension")->capture_default_str();
  c_ingest->add_option("--corpus", ingest.corpus, "corpus manifest to validate rows against");
  c_ingest->add_option("--out", ingest.out, "output store file")->required();

  ClusterArgs cluster;
  auto* c_cluster = cli.add_subcommand("cluster", "Hierarchical k-means over an embedding store");
  c_cluster->add_option("--store", cluster.store, "embedding store")->required();
  c_cluster->add_option("--out", cluster.out, "output cluster tree")->required();

  CurateArgs curate_args;
  auto* c_curate = cli.add_subcommand("curate", "Balanced subset selection from a cluster tree");
  c_curate->add_option("--store", curate_args.store, "embedding store")->required();
  c_curate->add_option("--tree", curate_args.tree, "cluster tree")->required();
  c_curate->add_option("--out", curate_args.out, "output curated set (JSONL)")->required();

  SampleArgs sample;
  auto* c_sample = cli.add_subcommand("sample", "Emit a mixed-batch manifest");
  c_sample->add_option("--curated", sample.curated, "curated set used as the unlabeled pool");
  c_sample->add_option("--unlabeled", sample.unlabeled, "unlabeled clip ids, one per line");
  c_sample->add_option("--clinical", sample.clinical, "clinical clip ids, one per line")->required();
  c_sample->add_option("--out", sample.out, "output batch manifest (JSONL)")->required();

  SplitArgs split;
  auto* c_split = cli.add_subcommand("split", "Video-level train/val/test split for one dataset");
  c_split->add_option("--corpus", split.corpus, "corpus manifest");
  c_split->add_option("--dataset", split.dataset, "dataset id");
  c_split->add_option("--out", split.out, "output split manifest");
  c_split->add_option("--official", split.official, "official partition (JSON split -> ids)");
  c_split->add_option("--community", split.community, "community partition (JSON split -> ids)");
  c_split->add_option("--created-at", split.created_at, "timestamp stored in the manifest (default: now)");
  VerifyArgs verify;
  auto* c_verify = c_split->add_subcommand("verify", "Check a split manifest against a corpus");
  c_verify->add_option("--manifest", verify.manifest, "split manifest")->required();
  c_verify->add_option("--corpus", verify.corpus, "corpus manifest")->required();

  EvaluateArgs evaluate;
  auto* c_eval = cli.add_subcommand("evaluate", "Acc@1 from a predictions CSV");
  c_eval->add_option("--predictions", evaluate.predictions, "CSV sample_id,predicted,label")->required();
  c_eval->add_option("--dataset", evaluate.dataset, "dataset id")->required();
  c_eval->add_option("--model", evaluate.model, "model id")->required();
  c_eval->add_option("--variant", evaluate.variant, "prompt variant (P1, P2)");
  c_eval->add_flag("--append", evaluate.append, "append to an existing scores CSV");
  c_eval->add_option("--out", evaluate.out, "scores CSV")->required();

  ReportArgs report;
  auto* c_report = cli.add_subcommand("report", "Render score tables");
  c_report->add_option("--scores", report.scores, "scores CSV (repeatable)");
  c_report->add_option("--domain-scores", report.domain_scores, "CSV model,domain,score");
  c_report->add_option("--domain-map", report.domain_map, "INI dataset -> domain map");
  c_report->add_option("--delta", report.deltas, "domain-row difference A,B (repeatable)");
  c_report->add_option("--format", report.format, "markdown | csv")->capture_default_str();
  c_report->add_option("--out", report.out, "output file (default: stdout)");

  StatsArgs stats;
  auto* c_stats = cli.add_subcommand("stats", "Corpus inventory table");
  c_stats->add_option("--corpus", stats.corpus, "corpus manifest")->required();
  c_stats->add_option("--out", stats.out, "output file (default: stdout)");

  std::string command;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  for (auto* sub : cli.get_subcommands()) command = sub->get_name();
  if (c_split->parsed() && c_verify->parsed()) command = "split verify";

  try {
    ConfigInputs inputs;
    if (!config_file.empty()) inputs.file = config_file;
    inputs.env = collect_env();
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) inputs.flags[key] = flag_values[key];
    }
    Invocation inv{args, command, resolve_config(inputs), {}, &out, &err};
    inv.manifest.command = command;
    inv.manifest.argv = args;
    inv.manifest.config = inv.config.values();
    inv.manifest.tool_version = std::string(tool_version());
    inv.manifest.started_at = utc_timestamp();
    if (!config_file.empty()) inv.input("config", config_file);

    if (c_ingest->parsed()) do_ingest(inv, ingest);
    else if (c_cluster->parsed()) do_cluster(inv, cluster);
    else if (c_curate->parsed()) do_curate(inv, curate_args);
    else if (c_sample->parsed()) do_sample(inv, sample);
    else if (c_verify->parsed()) return do_split_verify(inv, verify) ? kOk : kOperationalError;
    else if (c_split->parsed()) {
      if (split.corpus.empty() || split.dataset.empty() || split.out.empty()) {
        throw Error(ErrorCode::kConfigError, "split requires --corpus, --dataset and --out");
      }
      do_split(inv, split);
    } else if (c_eval->parsed()) do_evaluate(inv, evaluate);
    else if (c_report->parsed()) do_report(inv, report);
    else if (c_stats->parsed()) do_stats(inv, stats);
    return kOk;
  } catch (const Error& e) {
    report_error(err, command, std::string(error_name(e.code())), e.what());
    return is_usage_error(e.code()) ? kUsageError : kOperationalError;
  } catch (const std::exception& e) {
    report_error(err, command, "Internal", e.what());
    return kOperationalError;
  }
}

}  // namespace surgcurate::app
