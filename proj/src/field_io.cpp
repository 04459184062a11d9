#include "csvl/field_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "csvl/errors.hpp"

namespace csvl {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'V', 'L', 'F', 'L', 'D', '\n'};
constexpr std::size_t kNameBytes = 32;
constexpr std::size_t kSingularBytes = 48;
constexpr std::size_t kHeaderBytes = 8 + 4 + 4 + 4 * 8 + kNameBytes + 8 + kSingularBytes;

void put(std::string& out, const void* p, std::size_t len) {
    out.append(static_cast<const char*>(p), len);
}

void put_padded(std::string& out, const std::string& s, std::size_t len, const char* what) {
    if (s.size() >= len)
        throw invalid_configuration_error(std::string("field file: ") + what + " too long");
    out.append(s);
    out.append(len - s.size(), '\0');
}

} // namespace

void write_field_file(const std::filesystem::path& path, const Field& f,
                      const std::string& name, const std::string& singular) {
    std::string bytes;
    bytes.reserve(kHeaderBytes + f.values.size() * 8);
    put(bytes, kMagic, 8);
    std::uint32_t version = 1, n = static_cast<std::uint32_t>(f.domain.n);
    put(bytes, &version, 4);
    put(bytes, &n, 4);
    double geom[4] = {f.domain.L1, f.domain.L2, f.domain.offset.x, f.domain.offset.y};
    put(bytes, geom, sizeof geom);
    put_padded(bytes, name, kNameBytes, "name");
    double m = f.declared_mean ? *f.declared_mean : std::numeric_limits<double>::quiet_NaN();
    put(bytes, &m, 8);
    put_padded(bytes, singular, kSingularBytes, "singular descriptor");
    put(bytes, f.values.data(), f.values.size() * 8);

    // Atomic: temp file in the same directory, then rename.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Field read_field_file(const std::filesystem::path& path, FieldFileHeader* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_configuration_error("field file: cannot open " + path.string());
    std::string head(kHeaderBytes, '\0');
    in.read(head.data(), static_cast<std::streamsize>(kHeaderBytes));
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        throw invalid_configuration_error("field file: truncated header in " + path.string());
    if (std::memcmp(head.data(), kMagic, 8) != 0)
        throw invalid_configuration_error("field file: bad magic in " + path.string());

    std::uint32_t version = 0, n = 0;
    std::memcpy(&version, head.data() + 8, 4);
    std::memcpy(&n, head.data() + 12, 4);
    if (version != 1)
        throw invalid_configuration_error("field file: unsupported version in " + path.string());
    double geom[4];
    std::memcpy(geom, head.data() + 16, sizeof geom);

    FieldFileHeader h;
    h.version = version;
    h.n = static_cast<int>(n);
    h.L1 = geom[0];
    h.L2 = geom[1];
    h.offset_x = geom[2];
    h.offset_y = geom[3];
    h.name = std::string(head.data() + 48);
    double m = 0.0;
    std::memcpy(&m, head.data() + 48 + kNameBytes, 8);
    h.has_mean = !std::isnan(m);
    h.mean = h.has_mean ? m : 0.0;
    h.singular = std::string(head.data() + 48 + kNameBytes + 8);

    Field f(make_domain(h.L1, h.L2, h.n, {h.offset_x, h.offset_y}));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * 8));
    if (in.gcount() != static_cast<std::streamsize>(f.values.size() * 8))
        throw invalid_configuration_error("field file: truncated payload in " + path.string());
    char extra;
    if (in.read(&extra, 1))
        throw invalid_configuration_error("field file: trailing bytes in " + path.string());
    if (h.has_mean) f.declared_mean = h.mean;
    if (header) *header = h;
    return f;
}

} // namespace csvl
