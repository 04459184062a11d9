#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "csvl/spectral_torus.hpp"

namespace csvl {

/// Binary field container: fixed 136-byte header followed by n*n
/// little-endian 64-bit floats, row-major with the x index fastest.
/// Header layout:
///   bytes 0-7    magic "CSVLFLD\n"
///   bytes 8-11   version (u32, = 1)
///   bytes 12-15  n (u32)
///   bytes 16-47  L1, L2, offset_x, offset_y (4 doubles)
///   bytes 48-79  field name, zero-padded (32 bytes)
///   bytes 80-87  declared mean (double, NaN when absent)
///   bytes 88-135 singular-part descriptor, zero-padded (48 bytes), e.g.
///                "smooth" or "u0:N=2" for fields carrying the vortex logs
struct FieldFileHeader {
    std::uint32_t version = 1;
    int n = 0;
    double L1 = 0.0, L2 = 0.0;
    double offset_x = 0.0, offset_y = 0.0;
    std::string name;
    double mean = 0.0;
    bool has_mean = false;
    std::string singular;
};

// Atomic write (temp + rename); byte-exact round trip with read_field_file.
void write_field_file(const std::filesystem::path& path, const Field& f,
                      const std::string& name, const std::string& singular = "smooth");

// Throws invalid_configuration_error on bad magic, version, or truncation.
Field read_field_file(const std::filesystem::path& path, FieldFileHeader* header = nullptr);

} // namespace csvl
