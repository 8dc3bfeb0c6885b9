#include "vpatch/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace vpatch {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

constexpr std::size_t kHeaderBytes = 32;

}  // namespace

void write_field_dump(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const Grid& g = field.grid();
  os.write("VPF1", 4);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.nx()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.ny()));
  put_le<double>(os, g.h());
  const char pad[kHeaderBytes - 20] = {};
  os.write(pad, sizeof(pad));
  for (double v : field.values()) put_le<double>(os, v);
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

FieldDump read_field_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "VPF1", 4) != 0)
    throw Error(ErrorCode::IoError, path.string() + " is not a VPF1 field dump");
  FieldDump d;
  d.nx = get_le<std::uint32_t>(bytes.data() + 4);
  d.ny = get_le<std::uint32_t>(bytes.data() + 8);
  d.h = get_le<double>(bytes.data() + 12);
  const std::size_t count = static_cast<std::size_t>(d.nx) * d.ny;
  if (bytes.size() != kHeaderBytes + 8 * count)
    throw Error(ErrorCode::IoError, path.string() + " has a truncated payload");
  d.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) d.values[k] = get_le<double>(bytes.data() + kHeaderBytes + 8 * k);
  return d;
}

ScalarField load_field(const std::filesystem::path& path, const GridPtr& grid) {
  FieldDump d = read_field_dump(path);
  if (static_cast<int>(d.nx) != grid->nx() || static_cast<int>(d.ny) != grid->ny() || d.h != grid->h())
    throw Error(ErrorCode::GridMismatch, path.string() + " does not match the configured grid");
  return ScalarField(grid, std::move(d.values));
}

void write_pgm(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const Grid& g = field.grid();
  const double lo = std::min(0.0, field.min_value());
  const double hi = std::max(0.0, field.max_value());
  const double span = hi > lo ? hi - lo : 1.0;
  os << "P5\n" << g.nx() << ' ' << g.ny() << "\n255\n";
  std::vector<unsigned char> row(g.nx());
  for (int j = g.ny() - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i)
      row[i] = static_cast<unsigned char>(std::lround(255.0 * (field.at(i, j) - lo) / span));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace vpatch
