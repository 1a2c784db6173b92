#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vafs::ply {

enum class Format { kAscii, kBinaryLittleEndian };

enum class Type { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<Type> parse_type(const std::string& name);
const char* type_name(Type t);
std::size_t type_size(Type t);

struct Property {
  std::string name;
  Type type = Type::kFloat32;
  bool is_list = false;
  Type count_type = Type::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  Format format = Format::kAscii;
  std::vector<std::string> comments;
  std::vector<Element> elements;
  // Number of text lines consumed by the header, including end_header.
  std::size_t line_count = 0;
};

/// Scalar properties of the "vertex" element, widened to double (exact for every PLY scalar type).
struct VertexTable {
  std::vector<Property> columns;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major

  std::optional<std::size_t> column(const std::string& name) const;
  /// Throws DataError naming the missing property.
  std::size_t require_column(const std::string& name) const;
  double at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }
};

struct Document {
  Header header;
  VertexTable vertices;
};

/// Reads ASCII or binary little-endian PLY. Elements other than "vertex" are skipped.
/// Throws DataError carrying the line (ASCII) or record (binary) position on malformed input.
Document read(const std::filesystem::path& path);

struct Column {
  std::string name;
  Type type;
};

/// Writes a single vertex element. `value(row, col)` is cast to the column's type.
void write(const std::filesystem::path& path, Format format, const std::vector<std::string>& comments,
           const std::vector<Column>& columns, std::size_t rows,
           const std::function<double(std::size_t, std::size_t)>& value);

}  // namespace vafs::ply
