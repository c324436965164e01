#include "petaxon/matrix.hpp"

#include "petaxon/binio.hpp"

namespace petaxon {

namespace {
constexpr std::uint32_t kFvecVersion = 1;
}

void save_fvec(const FloatMatrix& m, const std::string& path) {
    BinWriter w;
    w.magic("FVEC");
    w.u32(kFvecVersion);
    w.u64(m.rows);
    w.u64(m.cols);
    for (float v : m.data) w.f32(v);
    write_file_bytes(path, w.bytes());
}

FloatMatrix load_fvec(const std::string& path) {
    auto bytes = read_file_bytes(path);
    BinReader r(bytes);
    r.expect_magic("FVEC");
    std::uint32_t version = r.u32();
    if (version != kFvecVersion)
        throw VersionMismatchError("unsupported FVEC version " + std::to_string(version));
    FloatMatrix m;
    m.rows = r.u64();
    m.cols = r.u64();
    if (m.rows != 0 && m.cols != 0 && m.rows > r.remaining() / (4 * m.cols))
        throw VersionMismatchError("truncated FVEC payload");
    m.data.resize(m.rows * m.cols);
    for (float& v : m.data) v = r.f32();
    return m;
}

}  // namespace petaxon
