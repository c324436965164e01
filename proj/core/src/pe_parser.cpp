#include "petaxon/pe_parser.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "petaxon/sha256.hpp"
#include "petaxon/vectorizer.hpp"

namespace petaxon {

namespace {

// Hard caps against adversarial headers; parsing stays total below them.
constexpr std::uint32_t kMaxSections = 1024;
constexpr std::uint32_t kMaxImportDescriptors = 1024;
constexpr std::uint32_t kMaxThunksPerLibrary = 16384;
constexpr std::uint32_t kMaxExportNames = 16384;
constexpr std::size_t kMaxNameLength = 256;

// Bounds-checked little-endian reads; out-of-range reads yield the default.
class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> b) : b_(b) {}

    bool ok(std::uint64_t off, std::uint64_t n) const {
        return off <= b_.size() && b_.size() - off >= n;
    }

    std::uint8_t u8(std::uint64_t off) const { return static_cast<std::uint8_t>(le(off, 1)); }
    std::uint16_t u16(std::uint64_t off) const { return static_cast<std::uint16_t>(le(off, 2)); }
    std::uint32_t u32(std::uint64_t off) const { return static_cast<std::uint32_t>(le(off, 4)); }
    std::uint64_t u64(std::uint64_t off) const { return le(off, 8); }

    std::size_t size() const { return b_.size(); }
    std::span<const std::uint8_t> bytes() const { return b_; }

private:
    std::uint64_t le(std::uint64_t off, int n) const {
        if (!ok(off, static_cast<std::uint64_t>(n))) return 0;
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(b_[off + i]) << (8 * i);
        return v;
    }

    std::span<const std::uint8_t> b_;
};

const std::array<const char*, kDataDirectoryCount> kDirectoryNames = {
    "EXPORT_TABLE",
    "IMPORT_TABLE",
    "RESOURCE_TABLE",
    "EXCEPTION_TABLE",
    "CERTIFICATE_TABLE",
    "BASE_RELOCATION_TABLE",
    "DEBUG",
    "ARCHITECTURE",
    "GLOBAL_PTR",
    "TLS_TABLE",
    "LOAD_CONFIG_TABLE",
    "BOUND_IMPORT",
    "IAT",
    "DELAY_IMPORT_DESCRIPTOR",
    "CLR_RUNTIME_HEADER",
};

std::string machine_tag(std::uint16_t m) {
    switch (m) {
        case 0x014c: return "I386";
        case 0x0162: return "R3000";
        case 0x0166: return "R4000";
        case 0x0168: return "R10000";
        case 0x0169: return "WCEMIPSV2";
        case 0x0184: return "ALPHA";
        case 0x01a2: return "SH3";
        case 0x01a3: return "SH3DSP";
        case 0x01a6: return "SH4";
        case 0x01a8: return "SH5";
        case 0x01c0: return "ARM";
        case 0x01c2: return "THUMB";
        case 0x01c4: return "ARMNT";
        case 0x01d3: return "AM33";
        case 0x01f0: return "POWERPC";
        case 0x01f1: return "POWERPCFP";
        case 0x0200: return "IA64";
        case 0x0266: return "MIPS16";
        case 0x0366: return "MIPSFPU";
        case 0x0466: return "MIPSFPU16";
        case 0x0ebc: return "EBC";
        case 0x8664: return "AMD64";
        case 0x9041: return "M32R";
        case 0xaa64: return "ARM64";
        case 0x5032: return "RISCV32";
        case 0x5064: return "RISCV64";
        case 0x0000: return "UNKNOWN";
        default: return "UNKNOWN";
    }
}

std::string subsystem_tag(std::uint16_t s) {
    switch (s) {
        case 1: return "NATIVE";
        case 2: return "WINDOWS_GUI";
        case 3: return "WINDOWS_CUI";
        case 5: return "OS2_CUI";
        case 7: return "POSIX_CUI";
        case 8: return "NATIVE_WINDOWS";
        case 9: return "WINDOWS_CE_GUI";
        case 10: return "EFI_APPLICATION";
        case 11: return "EFI_BOOT_SERVICE_DRIVER";
        case 12: return "EFI_RUNTIME_DRIVER";
        case 13: return "EFI_ROM";
        case 14: return "XBOX";
        case 16: return "WINDOWS_BOOT_APPLICATION";
        default: return "UNKNOWN";
    }
}

struct FlagName {
    std::uint16_t bit;
    const char* name;
};

constexpr FlagName kCoffCharacteristics[] = {
    {0x0001, "RELOCS_STRIPPED"},
    {0x0002, "EXECUTABLE_IMAGE"},
    {0x0004, "LINE_NUMS_STRIPPED"},
    {0x0008, "LOCAL_SYMS_STRIPPED"},
    {0x0010, "AGGRESSIVE_WS_TRIM"},
    {0x0020, "LARGE_ADDRESS_AWARE"},
    {0x0080, "BYTES_REVERSED_LO"},
    {0x0100, "NEED_32BIT_MACHINE"},
    {0x0200, "DEBUG_STRIPPED"},
    {0x0400, "REMOVABLE_RUN_FROM_SWAP"},
    {0x0800, "NET_RUN_FROM_SWAP"},
    {0x1000, "SYSTEM"},
    {0x2000, "DLL"},
    {0x4000, "UP_SYSTEM_ONLY"},
    {0x8000, "BYTES_REVERSED_HI"},
};

constexpr FlagName kDllCharacteristics[] = {
    {0x0020, "HIGH_ENTROPY_VA"},
    {0x0040, "DYNAMIC_BASE"},
    {0x0080, "FORCE_INTEGRITY"},
    {0x0100, "NX_COMPAT"},
    {0x0200, "NO_ISOLATION"},
    {0x0400, "NO_SEH"},
    {0x0800, "NO_BIND"},
    {0x1000, "APPCONTAINER"},
    {0x2000, "WDM_DRIVER"},
    {0x4000, "GUARD_CF"},
    {0x8000, "TERMINAL_SERVER_AWARE"},
};

constexpr struct {
    std::uint32_t bit;
    const char* name;
} kSectionProperties[] = {
    {0x00000020, "code"},
    {0x00000040, "initialized_data"},
    {0x00000080, "uninitialized_data"},
    {0x02000000, "discardable"},
    {0x04000000, "not_cached"},
    {0x08000000, "not_paged"},
    {0x10000000, "shared"},
    {0x20000000, "executable"},
    {0x40000000, "readable"},
    {0x80000000, "writable"},
};

std::vector<std::string> flag_tags(std::uint16_t value, std::span<const FlagName> table) {
    std::vector<std::string> tags;
    for (const auto& f : table)
        if (value & f.bit) tags.emplace_back(f.name);
    return tags;
}

std::vector<std::string> section_property_tags(std::uint32_t chara) {
    std::vector<std::string> tags;
    for (const auto& f : kSectionProperties)
        if (chara & f.bit) tags.emplace_back(f.name);
    return tags;
}

// Names from malware samples can contain arbitrary bytes; keep them
// printable ASCII so the JSONL stream stays valid UTF-8.
std::string sanitize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) out.push_back(c >= 0x20 && c < 0x7F ? static_cast<char>(c) : '?');
    return out;
}

std::string read_cstring(const Cursor& c, std::uint64_t off) {
    if (!c.ok(off, 1)) return {};
    std::string s;
    for (std::size_t i = 0; i < kMaxNameLength && c.ok(off + i, 1); ++i) {
        std::uint8_t b = c.u8(off + i);
        if (b == 0) break;
        s.push_back(static_cast<char>(b));
    }
    return sanitize_name(s);
}

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) {
    if (a <= 1) return v;
    std::uint64_t rem = v % a;
    return rem == 0 ? v : v + (a - rem);
}

struct RawSection {
    std::uint32_t vsize = 0;
    std::uint32_t vaddr = 0;
    std::uint32_t raw_size = 0;
    std::uint32_t raw_ptr = 0;
};

// RVA -> file offset through the section table, falling back to the header
// region below sizeof_headers. Returns npos when unmapped.
constexpr std::uint64_t kBadOffset = ~0ull;

std::uint64_t rva_to_offset(std::uint64_t rva, std::span<const RawSection> sections,
                            std::uint64_t sizeof_headers) {
    for (const auto& s : sections) {
        if (rva >= s.vaddr && rva - s.vaddr < s.raw_size)
            return s.raw_ptr + (rva - s.vaddr);
    }
    if (rva < sizeof_headers) return rva;
    return kBadOffset;
}

void parse_imports(PEFileInfo& info, const Cursor& c, std::span<const RawSection> raw_sections,
                   bool pe_plus) {
    std::uint64_t dir_rva = info.data_directories[1].virtual_address;
    if (dir_rva == 0) return;
    std::uint64_t desc_off = rva_to_offset(dir_rva, raw_sections, info.sizeof_headers);
    if (desc_off == kBadOffset) return;

    for (std::uint32_t i = 0; i < kMaxImportDescriptors; ++i) {
        std::uint64_t d = desc_off + 20ull * i;
        if (!c.ok(d, 20)) break;
        std::uint32_t original_first_thunk = c.u32(d);
        std::uint32_t name_rva = c.u32(d + 12);
        std::uint32_t first_thunk = c.u32(d + 16);
        if (original_first_thunk == 0 && name_rva == 0 && first_thunk == 0) break;

        std::uint64_t name_off = rva_to_offset(name_rva, raw_sections, info.sizeof_headers);
        std::string library = name_off == kBadOffset ? std::string() : read_cstring(c, name_off);
        if (library.empty()) continue;

        auto& functions = info.imports[library];
        std::uint32_t thunk_rva = original_first_thunk != 0 ? original_first_thunk : first_thunk;
        std::uint64_t thunk_off = rva_to_offset(thunk_rva, raw_sections, info.sizeof_headers);
        if (thunk_off == kBadOffset) continue;

        std::uint64_t entry_size = pe_plus ? 8 : 4;
        for (std::uint32_t j = 0; j < kMaxThunksPerLibrary; ++j) {
            std::uint64_t t = thunk_off + entry_size * j;
            if (!c.ok(t, entry_size)) break;
            std::uint64_t entry = pe_plus ? c.u64(t) : c.u32(t);
            if (entry == 0) break;
            bool by_ordinal = pe_plus ? (entry & 0x8000000000000000ull) != 0
                                      : (entry & 0x80000000ull) != 0;
            if (by_ordinal) {
                functions.push_back("ordinal" + std::to_string(entry & 0xFFFF));
                continue;
            }
            std::uint64_t hint_rva = entry & 0x7FFFFFFFull;
            std::uint64_t hint_off = rva_to_offset(hint_rva, raw_sections, info.sizeof_headers);
            if (hint_off == kBadOffset) continue;
            std::string fn = read_cstring(c, hint_off + 2);  // skip the u16 hint
            if (!fn.empty()) functions.push_back(std::move(fn));
        }
    }
}

void parse_exports(PEFileInfo& info, const Cursor& c, std::span<const RawSection> raw_sections) {
    std::uint64_t dir_rva = info.data_directories[0].virtual_address;
    if (dir_rva == 0) return;
    std::uint64_t dir_off = rva_to_offset(dir_rva, raw_sections, info.sizeof_headers);
    if (dir_off == kBadOffset || !c.ok(dir_off, 40)) return;

    std::uint32_t name_count = c.u32(dir_off + 24);
    std::uint32_t names_rva = c.u32(dir_off + 32);
    std::uint64_t names_off = rva_to_offset(names_rva, raw_sections, info.sizeof_headers);
    if (names_off == kBadOffset) return;

    name_count = std::min(name_count, kMaxExportNames);
    for (std::uint32_t i = 0; i < name_count; ++i) {
        if (!c.ok(names_off + 4ull * i, 4)) break;
        std::uint64_t rva = c.u32(names_off + 4ull * i);
        std::uint64_t off = rva_to_offset(rva, raw_sections, info.sizeof_headers);
        if (off == kBadOffset) continue;
        std::string name = read_cstring(c, off);
        if (!name.empty()) info.exports.push_back(std::move(name));
    }
}

}  // namespace

const std::array<const char*, kDataDirectoryCount>& data_directory_names() {
    return kDirectoryNames;
}

PEFileInfo parse_pe(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'M' || bytes[1] != 'Z')
        throw NotPeError("missing DOS magic");
    Cursor c(bytes);
    if (!c.ok(0x3C, 4)) throw NotPeError("truncated DOS header, no PE signature offset");
    std::uint32_t pe_off = c.u32(0x3C);
    if (!c.ok(pe_off, 4)) throw NotPeError("PE signature offset out of bounds");
    static const std::uint8_t kPeSig[4] = {'P', 'E', 0, 0};
    if (std::memcmp(bytes.data() + pe_off, kPeSig, 4) != 0)
        throw NotPeError("missing PE signature");

    PEFileInfo info;
    for (std::size_t i = 0; i < kDataDirectoryCount; ++i)
        info.data_directories[i].name = kDirectoryNames[i];

    std::uint64_t coff = pe_off + 4ull;
    info.machine = machine_tag(c.u16(coff));
    std::uint32_t section_count = std::min<std::uint32_t>(c.u16(coff + 2), kMaxSections);
    info.coff_timestamp = static_cast<std::int64_t>(c.u32(coff + 4));
    info.symbol_count = c.u32(coff + 12);
    std::uint16_t optional_size = c.u16(coff + 16);
    info.characteristics = flag_tags(c.u16(coff + 18), kCoffCharacteristics);

    std::uint64_t opt = coff + 20;
    std::uint16_t magic = c.u16(opt);
    bool pe_plus = magic == 0x20B;
    if (magic == 0x10B)
        info.magic = "PE32";
    else if (pe_plus)
        info.magic = "PE32+";

    info.linker_version = {c.u8(opt + 2), c.u8(opt + 3)};
    info.sizeof_code = c.u32(opt + 4);
    std::uint32_t entry_rva = c.u32(opt + 16);
    std::uint32_t section_align = c.u32(opt + 32);
    info.os_version = {c.u16(opt + 40), c.u16(opt + 42)};
    info.image_version = {c.u16(opt + 44), c.u16(opt + 46)};
    info.subsystem_version = {c.u16(opt + 48), c.u16(opt + 50)};
    info.sizeof_headers = c.u32(opt + 60);
    info.subsystem = subsystem_tag(c.u16(opt + 68));
    info.dll_characteristics = flag_tags(c.u16(opt + 70), kDllCharacteristics);
    info.sizeof_heap_commit = pe_plus ? c.u64(opt + 0x60) : c.u32(opt + 0x54);

    std::uint32_t dir_count = c.u32(pe_plus ? opt + 0x6C : opt + 0x5C);
    std::uint64_t dirs_off = opt + (pe_plus ? 0x70 : 0x60);
    for (std::uint32_t i = 0; i < std::min<std::uint32_t>(dir_count, kDataDirectoryCount); ++i) {
        info.data_directories[i].virtual_address = c.u32(dirs_off + 8ull * i);
        info.data_directories[i].size = c.u32(dirs_off + 8ull * i + 4);
    }
    info.has_debug = info.data_directories[6].virtual_address != 0;
    info.has_tls = info.data_directories[9].virtual_address != 0;
    info.has_relocations = info.data_directories[5].virtual_address != 0;
    info.has_resources = info.data_directories[2].virtual_address != 0;
    info.has_signature = info.data_directories[4].virtual_address != 0;

    std::uint64_t section_table = opt + optional_size;
    std::vector<RawSection> raw_sections;
    for (std::uint32_t s = 0; s < section_count; ++s) {
        std::uint64_t h = section_table + 40ull * s;
        if (!c.ok(h, 40)) break;
        SectionInfo sec;
        std::string name(reinterpret_cast<const char*>(bytes.data() + h), 8);
        name.erase(name.find_last_not_of('\0') + 1);
        sec.name = sanitize_name(name);

        RawSection raw;
        raw.vsize = c.u32(h + 8);
        raw.vaddr = c.u32(h + 12);
        raw.raw_size = c.u32(h + 16);
        raw.raw_ptr = c.u32(h + 20);
        sec.vsize = raw.vsize;
        sec.size = raw.raw_size;
        sec.properties = section_property_tags(c.u32(h + 36));

        if (raw.raw_ptr < bytes.size() && raw.raw_size > 0) {
            std::uint64_t len = std::min<std::uint64_t>(raw.raw_size, bytes.size() - raw.raw_ptr);
            sec.entropy = section_entropy(bytes.subspan(raw.raw_ptr, len));
        }
        info.vsize += align_up(sec.vsize, section_align);

        if (entry_rva != 0 && info.entry_section.empty()) {
            std::uint64_t span = std::max<std::uint64_t>(raw.vsize, raw.raw_size);
            if (entry_rva >= raw.vaddr && entry_rva - raw.vaddr < span)
                info.entry_section = sec.name;
        }
        raw_sections.push_back(raw);
        info.sections.push_back(std::move(sec));
    }

    parse_imports(info, c, raw_sections, pe_plus);
    parse_exports(info, c, raw_sections);
    return info;
}

double section_entropy(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return 0.0;
    std::array<std::uint64_t, 256> counts{};
    for (std::uint8_t b : bytes) ++counts[b];
    double h = 0.0;
    double n = static_cast<double>(bytes.size());
    for (std::uint64_t cnt : counts) {
        if (cnt == 0) continue;
        double p = static_cast<double>(cnt) / n;
        h -= p * std::log2(p);
    }
    return h;
}

StringStats scan_strings(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t kMinRun = 5;
    StringStats st;

    auto is_printable = [](std::uint8_t c) { return c >= 0x20 && c <= 0x7F; };
    auto flush_run = [&](std::size_t begin, std::size_t end) {
        std::size_t len = end - begin;
        if (len < kMinRun) return;
        ++st.numstrings;
        st.printables += len;
        for (std::size_t i = begin; i < end; ++i) ++st.printabledist[bytes[i] - 0x20];

        std::string_view run(reinterpret_cast<const char*>(bytes.data() + begin), len);
        if (len >= 3 && (run[0] == 'c' || run[0] == 'C') && run[1] == ':' && run[2] == '\\')
            ++st.paths;
        if (run.find("http://") != std::string_view::npos ||
            run.find("https://") != std::string_view::npos)
            ++st.urls;
        if (run.find("HKEY_") != std::string_view::npos) ++st.registry;
    };

    std::size_t run_start = 0;
    bool in_run = false;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (is_printable(bytes[i])) {
            if (!in_run) {
                run_start = i;
                in_run = true;
            }
        } else if (in_run) {
            flush_run(run_start, i);
            in_run = false;
        }
    }
    if (in_run) flush_run(run_start, bytes.size());

    if (st.numstrings > 0)
        st.avlength = static_cast<double>(st.printables) / static_cast<double>(st.numstrings);
    if (st.printables > 0) {
        double n = static_cast<double>(st.printables);
        for (std::uint32_t cnt : st.printabledist) {
            if (cnt == 0) continue;
            double p = static_cast<double>(cnt) / n;
            st.entropy -= p * std::log2(p);
        }
    }
    for (std::size_t i = 0; i + 1 < bytes.size(); ++i)
        if (bytes[i] == 'M' && bytes[i + 1] == 'Z') ++st.mz;
    return st;
}

RawFeatureRecord extract_record(const PEFileInfo& info, std::span<const std::uint8_t> bytes) {
    RawFeatureRecord rec;
    rec.sha256 = sha256_hex(bytes);
    rec.histogram = byte_histogram_counts(bytes);
    rec.byteentropy = byte_entropy_counts(bytes);
    rec.strings = scan_strings(bytes);

    std::uint64_t import_count = 0;
    for (const auto& [lib, fns] : info.imports) import_count += fns.size();
    rec.general.size = bytes.size();
    rec.general.vsize = info.vsize;
    rec.general.has_debug = info.has_debug;
    rec.general.exports = info.exports.size();
    rec.general.imports = import_count;
    rec.general.has_relocations = info.has_relocations;
    rec.general.has_resources = info.has_resources;
    rec.general.has_signature = info.has_signature;
    rec.general.has_tls = info.has_tls;
    rec.general.symbols = info.symbol_count;

    rec.header.coff.timestamp = info.coff_timestamp;
    rec.header.coff.machine = info.machine;
    rec.header.coff.characteristics = info.characteristics;
    rec.header.optional.subsystem = info.subsystem;
    rec.header.optional.dll_characteristics = info.dll_characteristics;
    rec.header.optional.magic = info.magic;
    rec.header.optional.major_image_version = info.image_version.major;
    rec.header.optional.minor_image_version = info.image_version.minor;
    rec.header.optional.major_linker_version = info.linker_version.major;
    rec.header.optional.minor_linker_version = info.linker_version.minor;
    rec.header.optional.major_operating_system_version = info.os_version.major;
    rec.header.optional.minor_operating_system_version = info.os_version.minor;
    rec.header.optional.major_subsystem_version = info.subsystem_version.major;
    rec.header.optional.minor_subsystem_version = info.subsystem_version.minor;
    rec.header.optional.sizeof_code = info.sizeof_code;
    rec.header.optional.sizeof_headers = info.sizeof_headers;
    rec.header.optional.sizeof_heap_commit = info.sizeof_heap_commit;

    rec.sections.entry = info.entry_section;
    rec.sections.sections = info.sections;
    rec.imports = info.imports;
    rec.exports = info.exports;
    for (std::size_t i = 0; i < kDataDirectoryCount; ++i) {
        rec.datadirectories[i].size = info.data_directories[i].size;
        rec.datadirectories[i].virtual_address = info.data_directories[i].virtual_address;
    }
    return rec;
}

}  // namespace petaxon
