// Microbenchmarks for the per-file hot path: entropy windows, byte
// histograms, bucket hashing, and a full record vectorization.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "petaxon/pe_parser.hpp"
#include "petaxon/vectorizer.hpp"

using namespace petaxon;

namespace {

std::vector<std::uint8_t> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    return bytes;
}

RawFeatureRecord sample_record() {
    RawFeatureRecord rec;
    rec.sha256.assign(64, 'a');
    rec.general.size = 262144;
    rec.general.vsize = 300000;
    rec.general.has_debug = 1;
    rec.general.imports = 90;
    rec.general.exports = 2;
    rec.general.has_signature = 1;
    auto body = noise(262144, 11);
    rec.histogram = byte_histogram_counts(body);
    rec.byteentropy = byte_entropy_counts(body);
    rec.strings.numstrings = 4821;
    rec.strings.avlength = 12.4;
    rec.strings.entropy = 5.1;
    rec.strings.printables = 60211;
    rec.strings.paths = 12;
    rec.strings.urls = 3;
    rec.strings.registry = 2;
    rec.strings.mz = 4;
    for (int s = 0; s < 5; ++s) {
        SectionInfo sec;
        sec.name = ".sec" + std::to_string(s);
        sec.size = 40960;
        sec.vsize = 40960;
        sec.entropy = 5.5 + 0.3 * s;
        sec.properties = {"CNT_CODE", "MEM_READ"};
        rec.sections.sections.push_back(sec);
    }
    rec.sections.entry = ".sec0";
    for (int lib = 0; lib < 8; ++lib) {
        std::string name = "lib" + std::to_string(lib) + ".dll";
        auto& fns = rec.imports[name];
        for (int f = 0; f < 12; ++f) fns.push_back("Func" + std::to_string(lib * 12 + f));
    }
    rec.exports = {"Entry", "ServiceMain"};
    return rec;
}

void bm_section_entropy(benchmark::State& state) {
    auto bytes = noise(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(section_entropy(bytes));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bm_section_entropy)->Arg(4096)->Arg(65536)->Arg(1 << 20);

void bm_byte_histogram(benchmark::State& state) {
    auto bytes = noise(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(byte_histogram_counts(bytes));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bm_byte_histogram)->Arg(65536)->Arg(1 << 20);

void bm_byte_entropy_histogram(benchmark::State& state) {
    auto bytes = noise(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(byte_entropy_counts(bytes));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(bm_byte_entropy_histogram)->Arg(65536)->Arg(1 << 20);

void bm_hash_bucket(benchmark::State& state) {
    std::vector<std::string> names;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 256; ++i) {
        std::string s(8 + rng() % 24, '\0');
        for (auto& c : s) c = static_cast<char>('a' + rng() % 26);
        names.push_back(s);
    }
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(hash_bucket(names[i & 255], 256));
        ++i;
    }
}
BENCHMARK(bm_hash_bucket);

void bm_vectorize_record(benchmark::State& state) {
    auto rec = sample_record();
    auto layout = FeatureLayout::standard(build_import_vocabulary({&rec, 1}));
    for (auto _ : state) benchmark::DoNotOptimize(vectorize(rec, layout));
}
BENCHMARK(bm_vectorize_record);

}  // namespace

BENCHMARK_MAIN();
