#pragma once

#include <filesystem>

#include "vpatch/domain.hpp"

namespace vpatch {

/// Raw field dump: 32-byte header ("VPF1", u32 nx, u32 ny, f64 h, zero
/// padding) followed by nx*ny little-endian f64 values, row-major from the
/// bottom row, outside cells written as 0.
void write_field_dump(const std::filesystem::path& path, const ScalarField& field);

struct FieldDump {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double h = 0.0;
  std::vector<double> values;
};

FieldDump read_field_dump(const std::filesystem::path& path);
/// Reads a dump and checks it against `grid`.
ScalarField load_field(const std::filesystem::path& path, const GridPtr& grid);

/// Binary 8-bit PGM, linearly rescaled from [min, max] to [0, 255]; top image
/// row is the highest grid row.
void write_pgm(const std::filesystem::path& path, const ScalarField& field);

}  // namespace vpatch
