#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "petaxon/errors.hpp"
#include "petaxon/vectorizer.hpp"
#include "support/oracles.hpp"

using namespace petaxon;

namespace {

// Exactly 151 entries; the first few are real import names so vocabulary
// matching can be exercised, the rest are placeholders.
std::vector<std::string> test_vocab() {
    std::vector<std::string> v = {"kernel32.dll.createfilew", "kernel32.dll.readfile",
                                  "evil.dll.run"};
    for (std::size_t i = v.size(); i < kImportVocabSize; ++i)
        v.push_back("__pad." + std::to_string(i));
    return v;
}

RawFeatureRecord sample_record() {
    RawFeatureRecord rec;
    rec.sha256 = std::string(64, 'a');
    for (std::size_t i = 0; i < 256; ++i) rec.histogram[i] = i;
    rec.byteentropy[17] = 4;
    rec.byteentropy[200] = 12;
    rec.strings.numstrings = 42;
    rec.strings.avlength = 7.5;
    rec.strings.printabledist[0] = 10;
    rec.strings.printabledist[95] = 5;
    rec.strings.printables = 315;
    rec.strings.entropy = 4.25;
    rec.strings.paths = 2;
    rec.strings.urls = 1;
    rec.strings.registry = 3;
    rec.strings.mz = 1;
    rec.general.size = 123456;
    rec.general.vsize = 654321;
    rec.general.has_debug = true;
    rec.general.exports = 2;
    rec.general.imports = 5;
    rec.general.has_signature = true;
    rec.general.symbols = 9;
    rec.header.coff.timestamp = 1500000000;
    rec.header.coff.machine = "I386";
    rec.header.coff.characteristics = {"EXECUTABLE_IMAGE"};
    rec.header.optional.subsystem = "WINDOWS_GUI";
    rec.header.optional.dll_characteristics = {"NX_COMPAT", "DYNAMIC_BASE"};
    rec.header.optional.magic = "PE32";
    rec.header.optional.major_linker_version = 14;
    rec.header.optional.sizeof_code = 4096;
    rec.header.optional.sizeof_headers = 1024;
    rec.header.optional.sizeof_heap_commit = 8192;
    SectionInfo s;
    s.name = ".text";
    s.size = 2048;
    s.vsize = 2100;
    s.entropy = 6.1;
    s.properties = {"code", "executable", "readable"};
    rec.sections.entry = ".text";
    rec.sections.sections.push_back(s);
    rec.imports["KERNEL32.DLL"] = {"CreateFileW", "CreateFileW", "ReadFile", "HeapAlloc"};
    rec.imports["evil.dll"] = {"run"};
    rec.exports = {"init", "shutdown"};
    rec.datadirectories[1].virtual_address = 0x2000;
    rec.datadirectories[1].size = 100;
    return rec;
}

}  // namespace

TEST_CASE("standard layout matches the published dimensions") {
    auto layout = FeatureLayout::standard(test_vocab());
    CHECK(layout.version == 1);
    CHECK(layout.total_length == 1380);

    // Group subtotals, block by block.
    auto group_total = [&](const std::string& prefix) {
        std::size_t total = 0;
        for (const auto& b : layout.blocks)
            if (b.name.rfind(prefix, 0) == 0) total += b.length;
        return total;
    };
    CHECK(group_total("histogram") == 256);
    CHECK(group_total("byteentropy") == 256);
    CHECK(group_total("strings") == 104);
    CHECK(group_total("general") == 10);
    CHECK(group_total("header") == 62);
    CHECK(group_total("sections") == 255);
    CHECK(group_total("imports") == 279);
    CHECK(group_total("exports") == 128);
    CHECK(group_total("datadirectories") == 30);

    CHECK(layout.block_offset("histogram") == 0);
    CHECK(layout.block_offset("byteentropy") == 256);
    CHECK(layout.block_offset("imports.vocab") ==
          layout.block_offset("imports.libraries_hashed") + 128);
    CHECK_THROWS_AS(layout.block_offset("no_such_block"), LayoutMismatchError);
}

TEST_CASE("standard layout enforces the vocabulary size") {
    auto vocab = test_vocab();
    vocab.pop_back();
    CHECK_THROWS_AS(FeatureLayout::standard(vocab), ConfigError);
    vocab.push_back("x");
    vocab.push_back("y");
    CHECK_THROWS_AS(FeatureLayout::standard(vocab), ConfigError);
}

TEST_CASE("hash_bucket agrees with the FNV-1a reference") {
    // Golden pin for a name that is part of the model-file contract.
    CHECK(hash_bucket(".text", 50) == oracles::fnv1a64(".text") % 50);
    CHECK(oracles::fnv1a64("") == 14695981039346656037ull);  // offset basis

    std::mt19937_64 rng(3);
    for (int round = 0; round < 1000; ++round) {
        std::string name;
        const std::size_t len = rng() % 24;
        for (std::size_t i = 0; i < len; ++i)
            name.push_back(static_cast<char>('!' + rng() % 94));
        const std::size_t bins = 1 + rng() % 256;
        CHECK(hash_bucket(name, bins) == oracles::fnv1a64(name) % bins);
    }
    CHECK_THROWS_AS(hash_bucket("anything", 0), ConfigError);
}

TEST_CASE("hashed_pairs sums colliding contributions") {
    std::vector<std::pair<std::string, double>> pairs = {
        {"alpha", 1.5}, {"beta", 2.0}, {"alpha", 0.25}};

    // bins=1: everything collides into slot zero.
    auto one = hashed_pairs(pairs, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(3.75));

    // General case: build the expectation through the reference hash.
    const std::size_t bins = 7;
    std::vector<double> expected(bins, 0.0);
    for (const auto& [name, value] : pairs) expected[oracles::fnv1a64(name) % bins] += value;
    auto got = hashed_pairs(pairs, bins);
    REQUIRE(got.size() == bins);
    for (std::size_t i = 0; i < bins; ++i) CHECK(got[i] == doctest::Approx(expected[i]));
}

TEST_CASE("byte_histogram normalizes to one") {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 100; ++round) {
        std::vector<std::uint8_t> buf(1 + rng() % 5000);
        for (auto& b : buf) b = static_cast<std::uint8_t>(rng());

        auto counts = byte_histogram_counts(buf);
        auto ref = oracles::byte_histogram(buf);
        for (std::size_t i = 0; i < 256; ++i) CHECK(counts[i] == ref[i]);

        auto norm = byte_histogram(buf);
        double total = 0.0;
        for (double x : norm) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    auto empty = byte_histogram({});
    for (double x : empty) CHECK(x == 0.0);
}

TEST_CASE("byte-entropy histogram: 2048 cycling bytes fill one max-entropy row") {
    std::vector<std::uint8_t> buf(2048);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<std::uint8_t>(i);

    auto counts = byte_entropy_counts(buf);
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    CHECK(total == 2048);  // exactly one window, one count per byte

    auto hist = byte_entropy_histogram(buf);
    for (std::size_t i = 0; i < 240; ++i) CHECK(hist[i] == 0.0);
    for (std::size_t i = 240; i < 256; ++i)
        CHECK(hist[i] == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("byte-entropy window walk covers every byte exactly once per window") {
    auto total_counts = [](std::span<const std::uint8_t> buf) {
        auto counts = byte_entropy_counts(buf);
        std::uint64_t total = 0;
        for (auto c : counts) total += c;
        return total;
    };
    std::vector<std::uint8_t> buf(5000, 0x41);

    // window 2048 / stride 1024: starts 0, 1024, 2048 all fit in 4096 and the
    // last full window ends flush with the buffer, so no tail remains.
    CHECK(total_counts(std::span(buf).first(4096)) == 3 * 2048);
    CHECK(total_counts(std::span(buf).first(2049)) == 2048 + 1);
    CHECK(total_counts(std::span(buf).first(3072)) == 2 * 2048);
    CHECK(total_counts(std::span(buf).first(1000)) == 1000);  // single short window
    CHECK(total_counts(std::span(buf).first(0)) == 0);
    CHECK(total_counts(buf) == 3 * 2048 + 904);
}

TEST_CASE("byte-entropy histogram matches the reference walk") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 150; ++round) {
        std::vector<std::uint8_t> buf(rng() % 9000);
        // Mix high- and low-entropy stretches.
        for (std::size_t i = 0; i < buf.size(); ++i)
            buf[i] = (i / 512) % 2 ? static_cast<std::uint8_t>(rng()) : 0x20;

        auto got = byte_entropy_counts(buf);
        auto ref = oracles::byte_entropy(buf, 2048, 1024);
        for (std::size_t i = 0; i < 256; ++i) CHECK(got[i] == ref[i]);
    }

    // Non-default geometry goes through the same contract.
    std::vector<std::uint8_t> buf(777);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<std::uint8_t>(3 * i);
    auto got = byte_entropy_counts(buf, 256, 128);
    auto ref = oracles::byte_entropy(buf, 256, 128);
    for (std::size_t i = 0; i < 256; ++i) CHECK(got[i] == ref[i]);
}

TEST_CASE("import vocabulary counts occurrences case-insensitively") {
    auto rec = sample_record();
    auto vocab = test_vocab();
    auto features = import_vocab_features(rec.imports, vocab);
    REQUIRE(features.size() == kImportVocabSize);
    CHECK(features[0] == 2.0);  // CreateFileW listed twice
    CHECK(features[1] == 1.0);
    CHECK(features[2] == 1.0);  // evil.dll.run
    for (std::size_t i = 3; i < features.size(); ++i) CHECK(features[i] == 0.0);
}

TEST_CASE("build_import_vocabulary ranks by document frequency") {
    auto rec_with = [](std::vector<std::pair<std::string, std::string>> entries) {
        RawFeatureRecord rec;
        for (auto& [lib, fn] : entries) rec.imports[lib].push_back(fn);
        return rec;
    };
    std::vector<RawFeatureRecord> records;
    // "a.dll.x" in 3 records; "b.dll.y" and "a.dll.z" in 2 each (tie broken
    // lexicographically); "c.dll.q" in 1.
    records.push_back(rec_with({{"a.dll", "x"}, {"b.dll", "y"}, {"a.dll", "z"}}));
    records.push_back(rec_with({{"a.dll", "x"}, {"b.dll", "y"}, {"a.dll", "z"}, {"c.dll", "q"}}));
    records.push_back(rec_with({{"A.DLL", "X"}}));  // case folds into a.dll.x

    auto vocab = build_import_vocabulary(records, 5);
    REQUIRE(vocab.size() == 5);
    CHECK(vocab[0] == "a.dll.x");
    CHECK(vocab[1] == "a.dll.z");
    CHECK(vocab[2] == "b.dll.y");
    CHECK(vocab[3] == "c.dll.q");
    CHECK(vocab[4] == "__pad.0");

    // Document frequency counts a name once per record, however often the
    // record repeats it.
    std::vector<RawFeatureRecord> dup;
    dup.push_back(rec_with({{"d.dll", "f"}, {"d.dll", "f"}, {"d.dll", "f"}}));
    dup.push_back(rec_with({{"e.dll", "g"}}));
    dup.push_back(rec_with({{"e.dll", "g"}}));
    auto vocab2 = build_import_vocabulary(dup, 2);
    CHECK(vocab2[0] == "e.dll.g");
    CHECK(vocab2[1] == "d.dll.f");

    CHECK_THROWS_AS(build_import_vocabulary({}, 5), EmptyStreamError);
}

TEST_CASE("vectorize is deterministic and places fields at layout offsets") {
    auto layout = FeatureLayout::standard(test_vocab());
    auto rec = sample_record();

    auto v1 = vectorize(rec, layout);
    auto v2 = vectorize(rec, layout);
    REQUIRE(v1.values.size() == 1380);
    CHECK(v1.layout_version == 1);
    CHECK(v1.values == v2.values);

    CHECK(v1.values[layout.block_offset("strings.registry")] == 3.0f);
    CHECK(v1.values[layout.block_offset("strings.numstrings")] == 42.0f);
    CHECK(v1.values[layout.block_offset("general.size")] == 123456.0f);
    CHECK(v1.values[layout.block_offset("general.has_signature")] == 1.0f);
    CHECK(v1.values[layout.block_offset("general.has_tls")] == 0.0f);
    CHECK(v1.values[layout.block_offset("header.sizeof_code")] == 4096.0f);
    CHECK(v1.values[layout.block_offset("sections.general")] == 1.0f);  // count

    // Vocabulary slots carry occurrence counts.
    const std::size_t vocab_off = layout.block_offset("imports.vocab");
    CHECK(v1.values[vocab_off + 0] == 2.0f);
    CHECK(v1.values[vocab_off + 1] == 1.0f);
    CHECK(v1.values[vocab_off + 2] == 1.0f);

    // Machine name lands in its reference bucket; the rest of the block is
    // zero.
    const std::size_t machine_off = layout.block_offset("header.machine_hashed");
    const std::size_t machine_bucket = oracles::fnv1a64("I386") % 10;
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(v1.values[machine_off + i] == (i == machine_bucket ? 1.0f : 0.0f));

    // Histogram block is the normalized distribution.
    double head = 0.0;
    for (std::size_t i = 0; i < 256; ++i) head += v1.values[i];
    CHECK(head == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("absent string fields leave hashed blocks zero") {
    auto layout = FeatureLayout::standard(test_vocab());
    RawFeatureRecord rec;  // everything defaulted
    auto v = vectorize(rec, layout);
    const std::size_t off = layout.block_offset("header.machine_hashed");
    for (std::size_t i = 0; i < 10; ++i) CHECK(v.values[off + i] == 0.0f);
    const std::size_t entry_off = layout.block_offset("sections.entry_name_hashed");
    for (std::size_t i = 0; i < 50; ++i) CHECK(v.values[entry_off + i] == 0.0f);
}

TEST_CASE("vectorize rejects foreign layout versions") {
    auto layout = FeatureLayout::standard(test_vocab());
    layout.version = 2;
    CHECK_THROWS_AS(vectorize(sample_record(), layout), VersionMismatchError);
}

TEST_CASE("manifest enumerates every slot in order") {
    auto layout = FeatureLayout::standard(test_vocab());
    auto rows = layout_manifest(layout);
    REQUIRE(rows.size() == 1380);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].first == i);
        CHECK_FALSE(rows[i].second.empty());
    }
    // Named slots surface their index names.
    CHECK(rows[layout.block_offset("imports.vocab")].second ==
          "imports.vocab[kernel32.dll.createfilew]");
    CHECK(rows[layout.block_offset("general.size")].second == "general.size");
    CHECK(rows[layout.block_offset("histogram") + 7].second == "histogram[7]");

    std::ostringstream csv;
    write_manifest_csv(layout, csv);
    std::size_t lines = 0;
    for (char c : csv.str())
        if (c == '\n') ++lines;
    CHECK(lines == 1381);  // header + one row per slot
}
