// petaxon - static PE triage pipeline: extract, train, classify, eval,
// importance, embed, manifest, vectorize.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "petaxon/binio.hpp"
#include "petaxon/config.hpp"
#include "petaxon/dataset.hpp"
#include "petaxon/errors.hpp"
#include "petaxon/interpret.hpp"
#include "petaxon/metrics.hpp"
#include "petaxon/pe_parser.hpp"
#include "petaxon/pipeline.hpp"
#include "petaxon/vectorizer.hpp"

namespace {

using namespace petaxon;

constexpr const char* kFormatNotes = R"(File formats (all versioned; current versions shown):
  feature records  JSONL, one object per sample; column map: petaxon manifest (layout v1)
  label sidecar    TSV: sha256<TAB>threat_type<TAB>family<TAB>behavior (empty field = absent)
  pipeline model   'PLNE' container v1 embedding five 'GBDT' v1 model blobs + vocabularies
  vector batch     'FVEC' container v1, row-major 32-bit floats
  verdicts         JSONL: {sha256, stages:{...}, quarantined, final:{...}}
  config           INI sections [split] [families] [pipeline] [stages] [stage.<name>]

Exit codes: 0 ok, 64 usage/config, 2 produced no output, 3 training degeneracy,
4 model/layout mismatch, 1 other errors.)";

// Data goes to stdout unless -o names a file; diagnostics always on stderr.
class OutputTarget {
public:
    explicit OutputTarget(const std::string& path) {
        if (path.empty()) return;
        file_.open(path, std::ios::binary);
        if (!file_) throw IoError("cannot open " + path + " for writing");
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void diag(const std::string& message) { std::cerr << "petaxon: " << message << "\n"; }

std::vector<std::string> pad_vocabulary() {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < kImportVocabSize; ++i)
        names.push_back("__pad." + std::to_string(i));
    return names;
}

FloatMatrix vectorize_records(std::span<const RawFeatureRecord> records,
                              const FeatureLayout& layout) {
    FloatMatrix X(records.size(), layout.total_length);
    for (std::size_t i = 0; i < records.size(); ++i) {
        FeatureVector fv = vectorize(records[i], layout);
        std::copy(fv.values.begin(), fv.values.end(), X.row(i).begin());
    }
    return X;
}

std::string display_label(const RawFeatureRecord& rec) {
    if (!rec.avclass_family.empty()) return rec.avclass_family;
    if (rec.label == 0) return "benign";
    if (rec.label == 1) return "malicious";
    return "unlabeled";
}

double safe_auc_binary(std::span<const double> scores, std::span<const int> labels) {
    try {
        return roc_auc_binary(scores, labels);
    } catch (const OneClassOnlyError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

double safe_auc_macro(const std::vector<std::vector<double>>& probs,
                      std::span<const int> labels) {
    try {
        return macro_auc(probs, labels);
    } catch (const OneClassOnlyError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// ---------------------------------------------------------------- extract --

int cmd_extract(const std::vector<std::string>& files, const std::string& out_path) {
    OutputTarget out(out_path);
    std::size_t emitted = 0;
    for (const auto& path : files) {
        try {
            auto bytes = read_file_bytes(path);
            PEFileInfo info = parse_pe(bytes);
            out.stream() << record_to_json_line(extract_record(info, bytes)) << "\n";
            ++emitted;
        } catch (const NotPeError& e) {
            diag(path + ": " + e.what());
        } catch (const IoError& e) {
            diag(path + ": " + e.what());
        }
    }
    if (emitted == 0) {
        diag("no input file produced a record");
        return 2;
    }
    return 0;
}

// ------------------------------------------------------------------ train --

struct TrainFlags {
    std::optional<double> validation_fraction;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> family_top_k;
    std::optional<std::size_t> min_stage_samples;
    std::optional<std::size_t> quarantine_floor;
    std::optional<std::size_t> iterations;
    std::optional<double> learning_rate;
};

PipelineConfig resolve_config(const std::string& config_path, const TrainFlags& flags) {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    if (flags.validation_fraction) {
        if (*flags.validation_fraction <= 0.0 || *flags.validation_fraction >= 1.0)
            throw ConfigError("--validation-fraction must lie strictly between 0 and 1");
        cfg.validation_fraction = *flags.validation_fraction;
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.family_top_k) {
        if (*flags.family_top_k == 0) throw ConfigError("--family-top-k must be positive");
        cfg.family_top_k = *flags.family_top_k;
    }
    if (flags.min_stage_samples) cfg.min_stage_samples = *flags.min_stage_samples;
    if (flags.quarantine_floor) cfg.quarantine_floor = *flags.quarantine_floor;
    if (flags.iterations) cfg.default_params.iterations = *flags.iterations;
    if (flags.learning_rate) cfg.default_params.learning_rate = *flags.learning_rate;
    return cfg;
}

int cmd_train(const std::string& data_path, const std::string& sidecar_path,
              const std::string& config_path, const TrainFlags& flags,
              const std::string& model_out, const std::string& report_path) {
    PipelineConfig cfg = resolve_config(config_path, flags);

    JsonlReadResult jr = read_jsonl(data_path);
    if (jr.skipped > 0)
        diag("skipped " + std::to_string(jr.skipped) + " unparseable input lines");

    LabelSidecar sidecar;
    if (!sidecar_path.empty()) sidecar = read_label_sidecar(sidecar_path);
    TaxonomyJoinResult joined = attach_taxonomy(std::move(jr.records), sidecar);
    if (joined.dropped_unlabeled > 0)
        diag("dropped " + std::to_string(joined.dropped_unlabeled) + " unlabeled records");
    if (joined.missing_sidecar > 0 && !sidecar_path.empty())
        diag(std::to_string(joined.missing_sidecar) +
             " malicious records had no sidecar entry");

    TrainResult result = train_pipeline(std::move(joined.samples), cfg);
    save_pipeline(result.model, model_out);

    std::string report_out = report_path.empty() ? model_out + ".report.csv" : report_path;
    std::ofstream rep(report_out, std::ios::binary);
    if (!rep) throw IoError("cannot open " + report_out + " for writing");
    write_stage_report_csv(result.reports, rep);

    for (const auto& [name, report] : result.reports)
        if (report.skipped)
            diag("stage " + name + " skipped: " + report.skip_reason);
    if (result.dropped_missing_label > 0)
        diag(std::to_string(result.dropped_missing_label) +
             " malicious samples lacked a stage label and were dropped there");
    diag("wrote " + model_out + " and " + report_out);
    return 0;
}

// --------------------------------------------------------------- classify --

enum class InputKind { pe, jsonl };

std::optional<InputKind> sniff_format(const std::string& wanted,
                                      std::span<const std::uint8_t> bytes) {
    if (wanted == "pe") return InputKind::pe;
    if (wanted == "jsonl") return InputKind::jsonl;
    if (bytes.size() >= 2 && bytes[0] == 'M' && bytes[1] == 'Z') return InputKind::pe;
    for (std::uint8_t b : bytes) {
        if (b == ' ' || b == '\t' || b == '\r' || b == '\n') continue;
        if (b == '{') return InputKind::jsonl;
        break;
    }
    return std::nullopt;
}

int cmd_classify(const std::string& model_path, const std::vector<std::string>& inputs,
                 const std::string& format, const std::string& out_path,
                 bool quarantine_summary) {
    PipelineModel model = load_pipeline(model_path);
    OutputTarget out(out_path);

    std::vector<Verdict> verdicts;
    std::map<std::string, int> truth;
    auto classify_record = [&](const RawFeatureRecord& rec) {
        FeatureVector fv = vectorize(rec, model.layout);
        verdicts.push_back(classify(model, fv, rec.sha256));
        out.stream() << verdict_to_json_line(verdicts.back()) << "\n";
        if (rec.label == 0 || rec.label == 1) truth[rec.sha256] = rec.label;
    };

    for (const auto& path : inputs) {
        std::vector<std::uint8_t> bytes;
        try {
            bytes = read_file_bytes(path);
        } catch (const IoError& e) {
            diag(path + ": " + e.what());
            continue;
        }
        auto kind = sniff_format(format, bytes);
        if (!kind) {
            diag(path + ": neither a PE image nor JSONL; use --format");
            continue;
        }
        if (*kind == InputKind::pe) {
            try {
                PEFileInfo info = parse_pe(bytes);
                classify_record(extract_record(info, bytes));
            } catch (const NotPeError& e) {
                diag(path + ": " + e.what());
            }
        } else {
            std::string text(bytes.begin(), bytes.end());
            std::istringstream lines(text);
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(lines, line)) {
                ++lineno;
                if (line.empty()) continue;
                auto rec = record_from_json_line(line);
                if (!rec) {
                    diag(path + ":" + std::to_string(lineno) + ": unparseable record");
                    continue;
                }
                classify_record(*rec);
            }
        }
    }

    if (quarantine_summary) {
        QuarantineReport qr = quarantine_report(verdicts, truth);
        nlohmann::ordered_json j;
        j["quarantine_report"] = {{"total", qr.total},
                                  {"quarantined", qr.quarantined},
                                  {"share", qr.share},
                                  {"recovered_benign", qr.recovered_benign},
                                  {"recovered_malicious", qr.recovered_malicious}};
        out.stream() << j.dump() << "\n";
    }
    return 0;
}

// ------------------------------------------------------------------- eval --

struct EvalRow {
    Verdict verdict;
    SampleLabels labels;
};

// Truth label for one taxonomic stage, mapped into the stage vocabulary;
// nullopt when the sample cannot be scored there (missing or unseen label).
std::optional<std::string> stage_truth(const SampleLabels& labels,
                                       const std::string SampleLabels::*field,
                                       const std::vector<std::string>& vocabulary) {
    if (labels.malware == 0) return std::string("benign");
    const std::string& raw = labels.*field;
    if (raw.empty()) return std::nullopt;
    if (std::find(vocabulary.begin(), vocabulary.end(), raw) != vocabulary.end()) return raw;
    if (std::find(vocabulary.begin(), vocabulary.end(), "other") != vocabulary.end())
        return std::string("other");
    return std::nullopt;
}

void write_csv_file(const std::filesystem::path& path,
                    const std::function<void(std::ostream&)>& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    writer(out);
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& sidecar_path, const std::string& out_dir) {
    PipelineModel model = load_pipeline(model_path);
    JsonlReadResult jr = read_jsonl(data_path);
    if (jr.skipped > 0)
        diag("skipped " + std::to_string(jr.skipped) + " unparseable input lines");
    LabelSidecar sidecar;
    if (!sidecar_path.empty()) sidecar = read_label_sidecar(sidecar_path);
    TaxonomyJoinResult joined = attach_taxonomy(std::move(jr.records), sidecar);

    std::vector<EvalRow> rows;
    for (const auto& sample : joined.samples) {
        FeatureVector fv = vectorize(sample.record, model.layout);
        rows.push_back({classify(model, fv, sample.record.sha256), sample.labels});
    }

    std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
    std::filesystem::create_directories(dir);

    std::vector<std::pair<std::string, StageReport>> reports;

    // Detection runs on every sample.
    {
        StageReport report;
        if (!rows.empty()) {
            std::vector<std::string> predicted, truth_labels;
            std::vector<double> scores;
            std::vector<int> y;
            for (const auto& row : rows) {
                predicted.push_back(row.verdict.detection.label);
                truth_labels.push_back(row.labels.malware == 1 ? "malicious" : "benign");
                scores.push_back(row.verdict.detection.probs[1]);
                y.push_back(row.labels.malware);
            }
            report.skipped = false;
            report.samples = rows.size();
            report.accuracy = accuracy(predicted, truth_labels);
            report.auc = safe_auc_binary(scores, y);
            auto [fp, fn] = fp_fn(predicted, truth_labels);
            report.false_positives = fp;
            report.false_negatives = fn;
            ConfusionMatrix cm =
                confusion(predicted, truth_labels, model.detection.vocabulary);
            write_csv_file(dir / "confusion_detection.csv",
                           [&](std::ostream& o) { write_confusion_csv(cm, o); });
            write_csv_file(dir / "confusion_detection_normalized.csv", [&](std::ostream& o) {
                write_confusion_normalized_csv(cm, o);
            });
        } else {
            report.skip_reason = "no samples";
        }
        reports.emplace_back("detection", report);
    }

    struct TaxStage {
        StageId id;
        const StageModel* stage;
        const StagePrediction Verdict::*pred;
        const std::string SampleLabels::*field;
    };
    const TaxStage taxonomic[] = {
        {StageId::threat_type, &model.threat_type, &Verdict::threat_type,
         &SampleLabels::threat_type},
        {StageId::family, &model.family, &Verdict::family, &SampleLabels::family},
        {StageId::behavior, &model.behavior, &Verdict::behavior, &SampleLabels::behavior},
    };
    for (const auto& ts : taxonomic) {
        StageReport report;
        const char* name = stage_name(ts.id);
        if (!ts.stage->trained) {
            report.skip_reason =
                ts.stage->skip_reason.empty() ? "not trained" : ts.stage->skip_reason;
        } else {
            std::vector<std::string> predicted, truth_labels;
            std::vector<std::vector<double>> probs;
            std::vector<int> y;
            std::map<std::string, int> index;
            for (std::size_t i = 0; i < ts.stage->vocabulary.size(); ++i)
                index[ts.stage->vocabulary[i]] = static_cast<int>(i);
            std::size_t unscorable = 0;
            for (const auto& row : rows) {
                const StagePrediction& pred = row.verdict.*(ts.pred);
                if (!pred.executed) continue;
                auto truth = stage_truth(row.labels, ts.field, ts.stage->vocabulary);
                if (!truth) {
                    ++unscorable;
                    continue;
                }
                predicted.push_back(pred.label);
                truth_labels.push_back(*truth);
                probs.push_back(pred.probs);
                y.push_back(index.at(*truth));
            }
            if (unscorable > 0)
                diag(std::string(name) + ": " + std::to_string(unscorable) +
                     " routed samples lacked a scorable label");
            if (predicted.empty()) {
                report.skip_reason = "no scorable samples reached this stage";
            } else {
                report.skipped = false;
                report.samples = predicted.size();
                report.accuracy = accuracy(predicted, truth_labels);
                report.auc = safe_auc_macro(probs, y);
                auto [fp, fn] = fp_fn(predicted, truth_labels);
                report.false_positives = fp;
                report.false_negatives = fn;
                ConfusionMatrix cm = confusion(predicted, truth_labels, ts.stage->vocabulary);
                write_csv_file(dir / ("confusion_" + std::string(name) + ".csv"),
                               [&](std::ostream& o) { write_confusion_csv(cm, o); });
                write_csv_file(dir / ("confusion_" + std::string(name) + "_normalized.csv"),
                               [&](std::ostream& o) { write_confusion_normalized_csv(cm, o); });
            }
        }
        reports.emplace_back(name, report);
    }

    // Quarantine: scored over the samples it actually re-examined.
    {
        StageReport report;
        if (!model.quarantine.trained) {
            report.skip_reason = model.quarantine.skip_reason.empty()
                                     ? "not trained"
                                     : model.quarantine.skip_reason;
        } else {
            std::vector<std::string> predicted, truth_labels;
            std::vector<double> scores;
            std::vector<int> y;
            for (const auto& row : rows) {
                if (!row.verdict.quarantine.executed) continue;
                predicted.push_back(row.verdict.quarantine.label);
                truth_labels.push_back(row.labels.malware == 1 ? "malicious" : "benign");
                scores.push_back(row.verdict.quarantine.probs[1]);
                y.push_back(row.labels.malware);
            }
            if (predicted.empty()) {
                report.skip_reason = "no samples were quarantined";
            } else {
                report.skipped = false;
                report.samples = predicted.size();
                report.accuracy = accuracy(predicted, truth_labels);
                report.auc = safe_auc_binary(scores, y);
                auto [fp, fn] = fp_fn(predicted, truth_labels);
                report.false_positives = fp;
                report.false_negatives = fn;
            }
        }
        reports.emplace_back("quarantine", report);
    }

    write_csv_file(dir / "stage_report.csv",
                   [&](std::ostream& o) { write_stage_report_csv(reports, o); });
    diag("wrote " + (dir / "stage_report.csv").string());
    return 0;
}

// ------------------------------------------------- importance / embedding --

int cmd_importance(const std::string& model_path, bool as_csv, std::size_t top_k,
                   const std::string& out_path) {
    PipelineModel model = load_pipeline(model_path);
    auto tables = importance_tables(model, top_k);
    OutputTarget out(out_path);
    if (as_csv)
        write_importance_csv(tables, out.stream());
    else
        write_importance_text(tables, out.stream());
    return 0;
}

int cmd_embed(const std::string& model_path, const std::string& data_path,
              const std::string& out_path, std::size_t k) {
    PipelineModel model = load_pipeline(model_path);
    JsonlReadResult jr = read_jsonl(data_path);
    if (jr.skipped > 0)
        diag("skipped " + std::to_string(jr.skipped) + " unparseable input lines");

    FloatMatrix X = vectorize_records(jr.records, model.layout);
    std::vector<std::string> shas, labels;
    for (const auto& rec : jr.records) {
        shas.push_back(rec.sha256);
        labels.push_back(display_label(rec));
    }

    EmbeddingResult result = embed(X, k);
    if (result.rank_deficient)
        diag("rank deficient: only " + std::to_string(result.k) +
             " nonzero-variance components exist");
    embedding_export(result, shas, labels, out_path);
    diag("wrote " + out_path);
    return 0;
}

// ------------------------------------------------------- layout utilities --

FeatureLayout layout_from_sources(const std::string& model_path, const std::string& data_path) {
    if (!model_path.empty()) return load_pipeline(model_path).layout;
    if (!data_path.empty()) {
        JsonlReadResult jr = read_jsonl(data_path);
        return FeatureLayout::standard(build_import_vocabulary(jr.records));
    }
    return FeatureLayout::standard(pad_vocabulary());
}

int cmd_manifest(const std::string& model_path, const std::string& data_path,
                 const std::string& out_path) {
    FeatureLayout layout = layout_from_sources(model_path, data_path);
    OutputTarget out(out_path);
    write_manifest_csv(layout, out.stream());
    return 0;
}

int cmd_vectorize(const std::string& model_path, const std::string& data_path,
                  const std::string& out_path) {
    FeatureLayout layout = layout_from_sources(model_path, data_path);
    JsonlReadResult jr = read_jsonl(data_path);
    if (jr.skipped > 0)
        diag("skipped " + std::to_string(jr.skipped) + " unparseable input lines");
    FloatMatrix X = vectorize_records(jr.records, layout);
    save_fvec(X, out_path);
    diag("wrote " + out_path + " (" + std::to_string(X.rows) + " x " +
         std::to_string(X.cols) + ")");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"petaxon - hierarchical static PE triage (detection, threat type, family, "
                 "behavior, quarantine)"};
    app.footer(kFormatNotes);
    app.set_version_flag("--version", "petaxon 0.1.0");
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "Parse PE files into JSONL feature records");
    std::vector<std::string> extract_files;
    std::string extract_out;
    extract->add_option("files", extract_files, "PE files to parse")->required();
    extract->add_option("-o,--out", extract_out, "output path (default stdout)");

    // train
    auto* train = app.add_subcommand("train", "Train the staged pipeline from labeled JSONL");
    std::string train_data, train_sidecar, train_config, train_model, train_report;
    TrainFlags flags;
    train->add_option("--data", train_data, "labeled JSONL feature records")->required();
    train->add_option("--sidecar", train_sidecar, "taxonomy sidecar TSV");
    train->add_option("--config", train_config, "pipeline config file");
    train->add_option("--model-out", train_model, "output model path")->required();
    train->add_option("--report", train_report,
                      "stage report CSV path (default <model>.report.csv)");
    train->add_option("--validation-fraction", flags.validation_fraction,
                      "override: validation share of the split");
    train->add_option("--seed", flags.seed, "override: split seed");
    train->add_option("--family-top-k", flags.family_top_k,
                      "override: family vocabulary size");
    train->add_option("--min-stage-samples", flags.min_stage_samples,
                      "override: per-stage sample floor");
    train->add_option("--quarantine-floor", flags.quarantine_floor,
                      "override: quarantine sample floor");
    train->add_option("--iterations", flags.iterations,
                      "override: boosting iterations (per-stage config sections win)");
    train->add_option("--learning-rate", flags.learning_rate,
                      "override: learning rate (per-stage config sections win)");

    // classify
    auto* classify_cmd =
        app.add_subcommand("classify", "Run the pipeline over PE files or JSONL records");
    std::string cls_model, cls_format = "auto", cls_out;
    std::vector<std::string> cls_inputs;
    bool cls_qreport = false;
    classify_cmd->add_option("--model", cls_model, "pipeline model path")->required();
    classify_cmd->add_option("inputs", cls_inputs, "PE files or JSONL record files");
    classify_cmd->add_option("--format", cls_format, "input format (default: sniff per file)")
        ->check(CLI::IsMember({"auto", "pe", "jsonl"}));
    classify_cmd->add_option("-o,--out", cls_out, "output path (default stdout)");
    classify_cmd->add_flag("--quarantine-report", cls_qreport,
                           "append a quarantine summary line (needs labeled JSONL input)");

    // eval
    auto* eval = app.add_subcommand("eval", "Score a model against labeled JSONL records");
    std::string eval_model, eval_data, eval_sidecar, eval_dir = ".";
    eval->add_option("--model", eval_model, "pipeline model path")->required();
    eval->add_option("--data", eval_data, "labeled JSONL feature records")->required();
    eval->add_option("--sidecar", eval_sidecar, "taxonomy sidecar TSV");
    eval->add_option("--out-dir", eval_dir, "directory for report and confusion CSVs");

    // importance
    auto* importance = app.add_subcommand("importance", "Per-stage feature-block importance");
    std::string imp_model, imp_out;
    bool imp_csv = false;
    std::size_t imp_top = 5;
    importance->add_option("--model", imp_model, "pipeline model path")->required();
    importance->add_flag("--csv", imp_csv, "emit CSV instead of aligned text");
    importance->add_option("--top", imp_top, "blocks per stage (default 5)");
    importance->add_option("-o,--out", imp_out, "output path (default stdout)");

    // embed
    auto* embed_cmd =
        app.add_subcommand("embed", "3-D principal-component embedding of JSONL records");
    std::string emb_model, emb_data, emb_out;
    std::size_t emb_k = 3;
    embed_cmd->add_option("--model", emb_model, "pipeline model (layout source)")->required();
    embed_cmd->add_option("--data", emb_data, "JSONL feature records")->required();
    embed_cmd->add_option("--out", emb_out, "output CSV path")->required();
    embed_cmd->add_option("-k", emb_k, "components (default 3)");

    // manifest
    auto* manifest =
        app.add_subcommand("manifest", "Column map of the feature vector layout (CSV)");
    std::string man_model, man_data, man_out;
    manifest->add_option("--model", man_model, "pipeline model (vocabulary source)");
    manifest->add_option("--data", man_data, "JSONL records (vocabulary source)");
    manifest->add_option("-o,--out", man_out, "output path (default stdout)");

    // vectorize
    auto* vec = app.add_subcommand("vectorize", "Write vectorized records as an FVEC batch");
    std::string vec_model, vec_data, vec_out;
    vec->add_option("--model", vec_model, "pipeline model (layout source)");
    vec->add_option("--data", vec_data, "JSONL feature records")->required();
    vec->add_option("--out", vec_out, "output FVEC path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (extract->parsed()) return cmd_extract(extract_files, extract_out);
        if (train->parsed())
            return cmd_train(train_data, train_sidecar, train_config, flags, train_model,
                             train_report);
        if (classify_cmd->parsed())
            return cmd_classify(cls_model, cls_inputs, cls_format, cls_out, cls_qreport);
        if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_sidecar, eval_dir);
        if (importance->parsed()) return cmd_importance(imp_model, imp_csv, imp_top, imp_out);
        if (embed_cmd->parsed()) return cmd_embed(emb_model, emb_data, emb_out, emb_k);
        if (manifest->parsed()) return cmd_manifest(man_model, man_data, man_out);
        if (vec->parsed()) return cmd_vectorize(vec_model, vec_data, vec_out);
    } catch (const InsufficientSamplesError& e) {
        diag(std::string("stage ") + e.stage() + ": " + e.what());
        return 3;
    } catch (const DegenerateLabelsError& e) {
        diag(e.what());
        return 3;
    } catch (const NoFamiliesError& e) {
        diag(e.what());
        return 3;
    } catch (const LayoutMismatchError& e) {
        diag(e.what());
        return 4;
    } catch (const VersionMismatchError& e) {
        diag(e.what());
        return 4;
    } catch (const ConfigError& e) {
        diag(e.what());
        return 64;
    } catch (const std::exception& e) {
        diag(e.what());
        return 1;
    }
    return 0;
}
