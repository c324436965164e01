#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "petaxon/dataset.hpp"
#include "petaxon/matrix.hpp"
#include "support/pe_builder.hpp"
#include "support/proc.hpp"
#include "support/synth.hpp"

// Target path injected by the build; every test drives the real binary.
static const std::string kCli = PETAXON_CLI;

namespace {

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with 64") {
    CHECK(proc::run({kCli}).exit_code == 64);
    CHECK(proc::run({kCli, "no-such-command"}).exit_code == 64);
    CHECK(proc::run({kCli, "train", "--model-out", "/tmp/x"}).exit_code == 64);  // --data missing
    CHECK(proc::run({kCli, "classify"}).exit_code == 64);                        // --model missing

    auto help = proc::run({kCli, "--help"});
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("extract") != std::string::npos);
    CHECK(help.out.find("Exit codes") != std::string::npos);

    auto version = proc::run({kCli, "--version"});
    CHECK(version.exit_code == 0);
    CHECK(version.out.find("petaxon") != std::string::npos);
}

TEST_CASE("extract: PE files in, JSONL records out") {
    proc::TempDir dir;
    pe_builder::PeSpec spec;
    spec.imports = {{"kernel32.dll", {"CreateFileW", "ReadFile"}, false}};
    proc::spit(dir.file("a.exe"), [&] {
        auto bytes = pe_builder::build(spec);
        return std::string(bytes.begin(), bytes.end());
    }());
    proc::spit(dir.file("b.exe"), [&] {
        auto bytes = pe_builder::minimal();
        return std::string(bytes.begin(), bytes.end());
    }());
    proc::spit(dir.file("notes.txt"), "just text, not an executable\n");

    auto ok = proc::run({kCli, "extract", dir.file("a.exe"), dir.file("b.exe"), "-o",
                         dir.file("records.jsonl")});
    CHECK(ok.exit_code == 0);
    auto records = lines_of(proc::slurp(dir.file("records.jsonl")));
    REQUIRE(records.size() == 2);
    for (const auto& line : records) {
        auto rec = petaxon::record_from_json_line(line);
        REQUIRE(rec.has_value());
        CHECK(rec->sha256.size() == 64);
        CHECK(rec->label == -1);  // extraction never invents labels
    }

    // Non-PE inputs are diagnosed and skipped; with no survivors that is
    // a distinct exit code.
    auto none = proc::run({kCli, "extract", dir.file("notes.txt")});
    CHECK(none.exit_code == 2);
    CHECK(none.err.find("no input file produced a record") != std::string::npos);

    auto partial =
        proc::run({kCli, "extract", dir.file("notes.txt"), dir.file("a.exe")});
    CHECK(partial.exit_code == 0);
    CHECK(line_count(partial.out) == 1);
    CHECK(partial.err.find("notes.txt") != std::string::npos);
}

TEST_CASE("train, classify, eval round trip on a synthetic corpus") {
    proc::TempDir dir;
    synth::SynthSpec spec;
    spec.count = 700;
    spec.seed = 23;
    spec.malware_share = 0.55;
    spec.n_types = 3;
    spec.n_top_families = 4;
    spec.n_rare_families = 3;
    spec.n_behaviors = 3;
    spec.benign_lookalike_rate = 0.05;
    spec.confused_malware_rate = 0.10;
    auto corpus = synth::make_corpus(spec);
    synth::write_corpus(corpus, dir.file("data.jsonl"), dir.file("labels.tsv"));

    const std::vector<std::string> common_flags = {
        "--sidecar", dir.file("labels.tsv"), "--validation-fraction", "0.5",
        "--seed", "7", "--family-top-k", "4", "--min-stage-samples", "20",
        "--quarantine-floor", "5", "--iterations", "15"};

    auto train_cmd = [&](const std::string& model, const std::string& report) {
        std::vector<std::string> argv = {kCli, "train", "--data", dir.file("data.jsonl"),
                                         "--model-out", model, "--report", report};
        argv.insert(argv.end(), common_flags.begin(), common_flags.end());
        return proc::run(argv);
    };

    auto first = train_cmd(dir.file("m1.plne"), dir.file("r1.csv"));
    REQUIRE_MESSAGE(first.exit_code == 0, first.err);
    auto report = proc::slurp(dir.file("r1.csv"));
    CHECK(report.rfind("metric,detection,threat_type,family,behavior,quarantine", 0) == 0);

    // Determinism: an identical second run serializes the same bytes.
    auto second = train_cmd(dir.file("m2.plne"), dir.file("r2.csv"));
    REQUIRE(second.exit_code == 0);
    CHECK(proc::slurp(dir.file("m1.plne")) == proc::slurp(dir.file("m2.plne")));
    CHECK(proc::slurp(dir.file("r1.csv")) == proc::slurp(dir.file("r2.csv")));

    // Classify the training records as JSONL.
    auto classified = proc::run({kCli, "classify", "--model", dir.file("m1.plne"),
                                 "--format", "jsonl", dir.file("data.jsonl"), "-o",
                                 dir.file("verdicts.jsonl"), "--quarantine-report"});
    REQUIRE_MESSAGE(classified.exit_code == 0, classified.err);
    auto verdict_lines = lines_of(proc::slurp(dir.file("verdicts.jsonl")));
    REQUIRE(verdict_lines.size() == corpus.records.size() + 1);  // + summary line
    auto summary = nlohmann::json::parse(verdict_lines.back());
    REQUIRE(summary.contains("quarantine_report"));
    CHECK(summary["quarantine_report"]["total"] == corpus.records.size());
    for (std::size_t i = 0; i + 1 < verdict_lines.size(); ++i) {
        auto v = nlohmann::json::parse(verdict_lines[i]);
        CHECK(v.contains("sha256"));
        CHECK(v.contains("final"));
        CHECK(v["final"].contains("malware"));
    }

    // Eval writes the report plus confusion matrices.
    auto evaluated = proc::run({kCli, "eval", "--model", dir.file("m1.plne"), "--data",
                                dir.file("data.jsonl"), "--sidecar", dir.file("labels.tsv"),
                                "--out-dir", dir.file("eval")});
    REQUIRE_MESSAGE(evaluated.exit_code == 0, evaluated.err);
    auto stage_report = proc::slurp(dir.file("eval/stage_report.csv"));
    CHECK(stage_report.rfind("metric,detection,threat_type,family,behavior,quarantine", 0) ==
          0);
    CHECK(!proc::slurp(dir.file("eval/confusion_detection.csv")).empty());
    CHECK(!proc::slurp(dir.file("eval/confusion_detection_normalized.csv")).empty());

    // A real PE classifies identically whether it arrives as a file or as
    // the JSONL record extract produced from it.
    pe_builder::PeSpec pspec;
    pspec.imports = {{"kernel32.dll", {"CreateFileW"}, false}};
    pspec.has_signature = true;
    proc::spit(dir.file("sample.exe"), [&] {
        auto bytes = pe_builder::build(pspec);
        return std::string(bytes.begin(), bytes.end());
    }());
    REQUIRE(proc::run({kCli, "extract", dir.file("sample.exe"), "-o",
                       dir.file("sample.jsonl")})
                .exit_code == 0);
    auto via_pe =
        proc::run({kCli, "classify", "--model", dir.file("m1.plne"), dir.file("sample.exe")});
    auto via_jsonl = proc::run(
        {kCli, "classify", "--model", dir.file("m1.plne"), dir.file("sample.jsonl")});
    REQUIRE(via_pe.exit_code == 0);
    REQUIRE(via_jsonl.exit_code == 0);
    CHECK(via_pe.out == via_jsonl.out);

    // Layout utilities driven from the trained model.
    auto manifest = proc::run({kCli, "manifest", "--model", dir.file("m1.plne"), "-o",
                               dir.file("manifest.csv")});
    REQUIRE(manifest.exit_code == 0);
    auto manifest_lines = lines_of(proc::slurp(dir.file("manifest.csv")));
    REQUIRE(manifest_lines.size() == 1381);
    CHECK(manifest_lines[0] == "index,name");

    auto vectorized = proc::run({kCli, "vectorize", "--model", dir.file("m1.plne"), "--data",
                                 dir.file("data.jsonl"), "--out", dir.file("batch.fvec")});
    REQUIRE_MESSAGE(vectorized.exit_code == 0, vectorized.err);
    auto batch = petaxon::load_fvec(dir.file("batch.fvec"));
    CHECK(batch.rows == corpus.records.size());
    CHECK(batch.cols == 1380);

    auto embedded = proc::run({kCli, "embed", "--model", dir.file("m1.plne"), "--data",
                               dir.file("data.jsonl"), "--out", dir.file("embed.csv")});
    REQUIRE_MESSAGE(embedded.exit_code == 0, embedded.err);
    CHECK(line_count(proc::slurp(dir.file("embed.csv"))) == corpus.records.size() + 1);

    auto importance =
        proc::run({kCli, "importance", "--model", dir.file("m1.plne")});
    REQUIRE(importance.exit_code == 0);
    CHECK(importance.out.find("== detection ==") != std::string::npos);
    auto importance_csv =
        proc::run({kCli, "importance", "--model", dir.file("m1.plne"), "--csv"});
    REQUIRE(importance_csv.exit_code == 0);
    CHECK(importance_csv.out.rfind("stage,rank,block,gain,share", 0) == 0);

    // Truncated model files are refused with the mismatch exit code.
    auto bytes = proc::slurp(dir.file("m1.plne"));
    proc::spit(dir.file("broken.plne"), bytes.substr(0, bytes.size() / 2));
    auto broken = proc::run({kCli, "classify", "--model", dir.file("broken.plne"),
                             dir.file("sample.exe")});
    CHECK(broken.exit_code == 4);
}

TEST_CASE("training degeneracies map to exit 3") {
    proc::TempDir dir;

    synth::SynthSpec tiny;
    tiny.count = 12;
    tiny.seed = 29;
    auto tiny_corpus = synth::make_corpus(tiny);
    synth::write_corpus(tiny_corpus, dir.file("tiny.jsonl"), dir.file("tiny.tsv"));
    auto floor = proc::run({kCli, "train", "--data", dir.file("tiny.jsonl"), "--sidecar",
                            dir.file("tiny.tsv"), "--model-out", dir.file("m.plne")});
    CHECK(floor.exit_code == 3);
    CHECK(floor.err.find("detection") != std::string::npos);

    synth::SynthSpec one_sided;
    one_sided.count = 60;
    one_sided.seed = 31;
    one_sided.malware_share = 1.0;
    auto one_corpus = synth::make_corpus(one_sided);
    synth::write_corpus(one_corpus, dir.file("one.jsonl"), dir.file("one.tsv"));
    auto degenerate = proc::run({kCli, "train", "--data", dir.file("one.jsonl"), "--sidecar",
                                 dir.file("one.tsv"), "--model-out", dir.file("m.plne"),
                                 "--min-stage-samples", "20"});
    CHECK(degenerate.exit_code == 3);
}

TEST_CASE("flag validation happens before any training work") {
    proc::TempDir dir;
    synth::SynthSpec spec;
    spec.count = 40;
    auto corpus = synth::make_corpus(spec);
    synth::write_corpus(corpus, dir.file("d.jsonl"), dir.file("d.tsv"));

    auto bad_fraction =
        proc::run({kCli, "train", "--data", dir.file("d.jsonl"), "--model-out",
                   dir.file("m.plne"), "--validation-fraction", "1.5"});
    CHECK(bad_fraction.exit_code == 64);

    auto bad_topk = proc::run({kCli, "train", "--data", dir.file("d.jsonl"), "--model-out",
                               dir.file("m.plne"), "--family-top-k", "0"});
    CHECK(bad_topk.exit_code == 64);
}

TEST_CASE("manifest without sources falls back to the padded vocabulary") {
    auto run = proc::run({kCli, "manifest"});
    REQUIRE(run.exit_code == 0);
    auto rows = lines_of(run.out);
    REQUIRE(rows.size() == 1381);
    CHECK(rows[0] == "index,name");
    bool found_pad = false;
    for (const auto& row : rows)
        if (row.find("imports.vocab[__pad.0]") != std::string::npos) found_pad = true;
    CHECK(found_pad);
}
