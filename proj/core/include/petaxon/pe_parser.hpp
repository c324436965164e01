#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "petaxon/errors.hpp"

namespace petaxon {

/// One section-table entry, with Shannon entropy of its raw bytes.
struct SectionInfo {
    std::string name;  // 8-byte PE name, trailing NULs stripped
    std::uint64_t size = 0;   // raw bytes on disk
    std::uint64_t vsize = 0;  // virtual size
    double entropy = 0.0;     // bits per byte, in [0, 8]
    std::vector<std::string> properties;
};

struct DataDirectoryInfo {
    std::string name;
    std::uint64_t virtual_address = 0;
    std::uint64_t size = 0;
};

/// The 15 canonical PE data directories, in table order.
constexpr std::size_t kDataDirectoryCount = 15;
const std::array<const char*, kDataDirectoryCount>& data_directory_names();

struct VersionPair {
    std::uint32_t major = 0;
    std::uint32_t minor = 0;
};

/// Structured header/section/import/export view of one PE binary.
/// Fields that cannot be read from a malformed file keep their defaults.
struct PEFileInfo {
    std::int64_t coff_timestamp = 0;
    std::string machine;
    std::vector<std::string> characteristics;
    std::string subsystem;
    std::vector<std::string> dll_characteristics;
    std::string magic;  // "PE32" or "PE32+"
    VersionPair image_version;
    VersionPair linker_version;
    VersionPair os_version;
    VersionPair subsystem_version;
    std::uint64_t sizeof_code = 0;
    std::uint64_t sizeof_headers = 0;
    std::uint64_t sizeof_heap_commit = 0;
    std::string entry_section;
    std::vector<SectionInfo> sections;
    std::map<std::string, std::vector<std::string>> imports;  // library -> functions
    std::vector<std::string> exports;
    std::array<DataDirectoryInfo, kDataDirectoryCount> data_directories;
    std::uint64_t vsize = 0;  // sum of section virtual sizes, alignment-rounded
    bool has_debug = false;
    bool has_tls = false;
    bool has_relocations = false;
    bool has_resources = false;
    bool has_signature = false;
    std::uint32_t symbol_count = 0;
};

/// Statistics over printable-character runs of length >= 5.
struct StringStats {
    std::uint64_t numstrings = 0;
    double avlength = 0.0;
    std::array<std::uint32_t, 96> printabledist{};  // counts over 0x20..0x7F
    std::uint64_t printables = 0;
    double entropy = 0.0;  // bits, over printabledist
    std::uint64_t paths = 0;     // runs beginning "C:\" (case-insensitive)
    std::uint64_t urls = 0;      // runs containing "http://" or "https://"
    std::uint64_t registry = 0;  // runs containing "HKEY_"
    std::uint64_t mz = 0;        // "MZ" occurrences over the whole buffer
};

struct GeneralInfo {
    std::uint64_t size = 0;
    std::uint64_t vsize = 0;
    bool has_debug = false;
    std::uint64_t exports = 0;
    std::uint64_t imports = 0;
    bool has_relocations = false;
    bool has_resources = false;
    bool has_signature = false;
    bool has_tls = false;
    std::uint64_t symbols = 0;
};

struct CoffInfo {
    std::int64_t timestamp = 0;
    std::string machine;
    std::vector<std::string> characteristics;
};

struct OptionalHeaderInfo {
    std::string subsystem;
    std::vector<std::string> dll_characteristics;
    std::string magic;
    std::uint32_t major_image_version = 0;
    std::uint32_t minor_image_version = 0;
    std::uint32_t major_linker_version = 0;
    std::uint32_t minor_linker_version = 0;
    std::uint32_t major_operating_system_version = 0;
    std::uint32_t minor_operating_system_version = 0;
    std::uint32_t major_subsystem_version = 0;
    std::uint32_t minor_subsystem_version = 0;
    std::uint64_t sizeof_code = 0;
    std::uint64_t sizeof_headers = 0;
    std::uint64_t sizeof_heap_commit = 0;
};

struct HeaderInfo {
    CoffInfo coff;
    OptionalHeaderInfo optional;
};

struct SectionGroup {
    std::string entry;  // name of the section holding the entry point
    std::vector<SectionInfo> sections;
};

struct DataDirectoryEntry {
    std::uint64_t size = 0;
    std::uint64_t virtual_address = 0;
};

/// Semi-raw static features of one PE sample: nine feature groups plus
/// identity and labels. The unit of ingestion and of JSONL serialization.
struct RawFeatureRecord {
    std::string sha256;
    std::array<std::uint64_t, 256> histogram{};    // raw byte counts
    std::array<std::uint64_t, 256> byteentropy{};  // (entropy bin, byte bin) counts
    StringStats strings;
    GeneralInfo general;
    HeaderInfo header;
    SectionGroup sections;
    std::map<std::string, std::vector<std::string>> imports;
    std::vector<std::string> exports;
    std::array<DataDirectoryEntry, kDataDirectoryCount> datadirectories;
    int label = -1;  // 0 benign, 1 malicious, -1 unlabeled
    // Taxonomy labels carried by EMBER-style JSONL records; empty = absent.
    std::string avclass_family;
    std::string threat_type;
    std::string behavior;
};

/// Parse a PE binary. Throws NotPeError when the DOS magic or the PE
/// signature is missing; otherwise total, malformed fields keep defaults.
PEFileInfo parse_pe(std::span<const std::uint8_t> bytes);

/// Shannon entropy of the byte-value distribution, in bits per byte.
/// Empty input yields 0.
double section_entropy(std::span<const std::uint8_t> bytes);

/// Scan for printable runs and derive string statistics.
StringStats scan_strings(std::span<const std::uint8_t> bytes);

/// Assemble the nine feature groups from a parsed file and its bytes.
/// Labels are left unset (-1 / absent).
RawFeatureRecord extract_record(const PEFileInfo& info, std::span<const std::uint8_t> bytes);

}  // namespace petaxon
