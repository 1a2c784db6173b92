#include "vafs/ply.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vafs/core.hpp"

namespace vafs::ply {

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

std::optional<Type> parse_type(const std::string& n) {
  if (n == "char" || n == "int8") return Type::kInt8;
  if (n == "uchar" || n == "uint8") return Type::kUInt8;
  if (n == "short" || n == "int16") return Type::kInt16;
  if (n == "ushort" || n == "uint16") return Type::kUInt16;
  if (n == "int" || n == "int32") return Type::kInt32;
  if (n == "uint" || n == "uint32") return Type::kUInt32;
  if (n == "float" || n == "float32") return Type::kFloat32;
  if (n == "double" || n == "float64") return Type::kFloat64;
  return std::nullopt;
}

const char* type_name(Type t) {
  switch (t) {
    case Type::kInt8: return "char";
    case Type::kUInt8: return "uchar";
    case Type::kInt16: return "short";
    case Type::kUInt16: return "ushort";
    case Type::kInt32: return "int";
    case Type::kUInt32: return "uint";
    case Type::kFloat32: return "float";
    case Type::kFloat64: return "double";
  }
  return "?";
}

std::size_t type_size(Type t) {
  switch (t) {
    case Type::kInt8:
    case Type::kUInt8: return 1;
    case Type::kInt16:
    case Type::kUInt16: return 2;
    case Type::kInt32:
    case Type::kUInt32:
    case Type::kFloat32: return 4;
    case Type::kFloat64: return 8;
  }
  return 0;
}

std::optional<std::size_t> VertexTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t VertexTable::require_column(const std::string& name) const {
  if (auto c = column(name)) return *c;
  throw DataError("PLY vertex element is missing required property '" + name + "'");
}

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& where, const std::string& what) {
  throw DataError(path.string() + ": " + where + ": " + what);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

Header read_header(std::istream& in, const std::filesystem::path& path) {
  Header h;
  std::string line;
  std::size_t lineno = 0;
  auto where = [&] { return "line " + std::to_string(lineno); };
  if (!read_line(in, line) || line != "ply") fail(path, "line 1", "missing 'ply' magic");
  lineno = 1;
  bool have_format = false;
  while (true) {
    if (!read_line(in, line)) fail(path, where(), "unexpected end of header");
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") {
      const auto pos = line.find(tok[0]) + tok[0].size();
      h.comments.push_back(pos < line.size() ? line.substr(pos + 1) : std::string{});
    } else if (tok[0] == "format") {
      if (tok.size() != 3) fail(path, where(), "malformed format line");
      if (tok[1] == "ascii") {
        h.format = Format::kAscii;
      } else if (tok[1] == "binary_little_endian") {
        h.format = Format::kBinaryLittleEndian;
      } else {
        fail(path, where(), "unsupported format '" + tok[1] + "'");
      }
      have_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) fail(path, where(), "malformed element line");
      Element e;
      e.name = tok[1];
      try {
        e.count = std::stoull(tok[2]);
      } catch (const std::exception&) {
        fail(path, where(), "bad element count '" + tok[2] + "'");
      }
      h.elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (h.elements.empty()) fail(path, where(), "property before any element");
      Property p;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = parse_type(tok[2]);
        auto vt = parse_type(tok[3]);
        if (!ct || !vt) fail(path, where(), "unknown list property type");
        p = {tok[4], *vt, true, *ct};
      } else if (tok.size() == 3) {
        auto t = parse_type(tok[1]);
        if (!t) fail(path, where(), "unknown property type '" + tok[1] + "'");
        p = {tok[2], *t, false, Type::kUInt8};
      } else {
        fail(path, where(), "malformed property line");
      }
      h.elements.back().properties.push_back(std::move(p));
    } else {
      fail(path, where(), "unknown header keyword '" + tok[0] + "'");
    }
  }
  if (!have_format) fail(path, "header", "missing format line");
  h.line_count = lineno;
  return h;
}

double parse_ascii_value(const std::string& tok, Type t, bool& ok) {
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  if (t == Type::kFloat32 || t == Type::kFloat64) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(b, e, v);
    ok = ec == std::errc{} && ptr == e;
    return t == Type::kFloat32 ? static_cast<double>(static_cast<float>(v)) : v;
  }
  long long v = 0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  ok = ec == std::errc{} && ptr == e;
  long long lo = 0;
  long long hi = 0;
  switch (t) {
    case Type::kInt8: lo = INT8_MIN, hi = INT8_MAX; break;
    case Type::kUInt8: lo = 0, hi = UINT8_MAX; break;
    case Type::kInt16: lo = INT16_MIN, hi = INT16_MAX; break;
    case Type::kUInt16: lo = 0, hi = UINT16_MAX; break;
    case Type::kInt32: lo = INT32_MIN, hi = INT32_MAX; break;
    default: lo = 0, hi = UINT32_MAX; break;
  }
  ok = ok && v >= lo && v <= hi;
  return static_cast<double>(v);
}

template <typename T>
double load_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double decode_binary(const char* p, Type t) {
  switch (t) {
    case Type::kInt8: return load_as<std::int8_t>(p);
    case Type::kUInt8: return load_as<std::uint8_t>(p);
    case Type::kInt16: return load_as<std::int16_t>(p);
    case Type::kUInt16: return load_as<std::uint16_t>(p);
    case Type::kInt32: return load_as<std::int32_t>(p);
    case Type::kUInt32: return load_as<std::uint32_t>(p);
    case Type::kFloat32: return load_as<float>(p);
    case Type::kFloat64: return load_as<double>(p);
  }
  return 0.0;
}

template <typename T>
void store_as(std::string& out, double v) {
  const T x = static_cast<T>(v);
  char buf[sizeof(T)];
  std::memcpy(buf, &x, sizeof(T));
  out.append(buf, sizeof(T));
}

void encode_binary(std::string& out, double v, Type t) {
  switch (t) {
    case Type::kInt8: store_as<std::int8_t>(out, v); break;
    case Type::kUInt8: store_as<std::uint8_t>(out, v); break;
    case Type::kInt16: store_as<std::int16_t>(out, v); break;
    case Type::kUInt16: store_as<std::uint16_t>(out, v); break;
    case Type::kInt32: store_as<std::int32_t>(out, v); break;
    case Type::kUInt32: store_as<std::uint32_t>(out, v); break;
    case Type::kFloat32: store_as<float>(out, v); break;
    case Type::kFloat64: store_as<double>(out, v); break;
  }
}

void encode_ascii(std::string& out, double v, Type t) {
  char buf[64];
  std::to_chars_result r{};
  if (t == Type::kFloat32) {
    r = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
  } else if (t == Type::kFloat64) {
    r = std::to_chars(buf, buf + sizeof(buf), v);
  } else {
    r = std::to_chars(buf, buf + sizeof(buf), static_cast<long long>(v));
  }
  out.append(buf, r.ptr);
}

void read_ascii_body(std::istream& in, const std::filesystem::path& path, Document& doc) {
  std::size_t lineno = doc.header.line_count;
  std::string line;
  for (const auto& el : doc.header.elements) {
    const bool is_vertex = el.name == "vertex";
    for (std::size_t r = 0; r < el.count; ++r) {
      if (!read_line(in, line)) fail(path, "line " + std::to_string(lineno + 1), "unexpected end of file in element '" + el.name + "'");
      ++lineno;
      const auto tok = split_ws(line);
      const std::string where = "line " + std::to_string(lineno);
      std::size_t t = 0;
      for (const auto& prop : el.properties) {
        if (t >= tok.size()) fail(path, where, "too few values (expected property '" + prop.name + "')");
        bool ok = false;
        if (prop.is_list) {
          const double n = parse_ascii_value(tok[t++], prop.count_type, ok);
          if (!ok) fail(path, where, "bad list count for '" + prop.name + "'");
          t += static_cast<std::size_t>(n);
          if (t > tok.size()) fail(path, where, "list '" + prop.name + "' runs past end of line");
          continue;
        }
        const double v = parse_ascii_value(tok[t++], prop.type, ok);
        if (!ok) fail(path, where, "cannot parse '" + tok[t - 1] + "' as " + type_name(prop.type) + " for '" + prop.name + "'");
        if (is_vertex) doc.vertices.values.push_back(v);
      }
      if (t != tok.size()) fail(path, where, "too many values (expected " + std::to_string(t) + ", got " + std::to_string(tok.size()) + ")");
    }
  }
}

void read_binary_body(std::istream& in, const std::filesystem::path& path, Document& doc) {
  std::vector<char> buf(8);
  auto read_exact = [&](std::size_t n, const std::string& where) {
    if (buf.size() < n) buf.resize(n);
    in.read(buf.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) fail(path, where, "truncated binary data");
  };
  for (const auto& el : doc.header.elements) {
    const bool is_vertex = el.name == "vertex";
    for (std::size_t r = 0; r < el.count; ++r) {
      const std::string where = "element '" + el.name + "' record " + std::to_string(r);
      for (const auto& prop : el.properties) {
        if (prop.is_list) {
          read_exact(type_size(prop.count_type), where);
          const auto n = static_cast<std::size_t>(decode_binary(buf.data(), prop.count_type));
          read_exact(n * type_size(prop.type), where);
          continue;
        }
        read_exact(type_size(prop.type), where);
        if (is_vertex) doc.vertices.values.push_back(decode_binary(buf.data(), prop.type));
      }
    }
    if (is_vertex) break;  // nothing after the vertex element is needed
  }
}

}  // namespace

Document read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Document doc;
  doc.header = read_header(in, path);
  for (const auto& el : doc.header.elements) {
    if (el.name != "vertex") continue;
    for (const auto& p : el.properties) {
      if (p.is_list) fail(path, "header", "list properties are not supported on the vertex element");
    }
    doc.vertices.columns = el.properties;
    doc.vertices.rows = el.count;
  }
  doc.vertices.values.reserve(doc.vertices.rows * doc.vertices.columns.size());
  if (doc.header.format == Format::kAscii) {
    read_ascii_body(in, path, doc);
  } else {
    read_binary_body(in, path, doc);
  }
  return doc;
}

void write(const std::filesystem::path& path, Format format, const std::vector<std::string>& comments,
           const std::vector<Column>& columns, std::size_t rows,
           const std::function<double(std::size_t, std::size_t)>& value) {
  std::string out;
  out += "ply\n";
  out += format == Format::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  for (const auto& c : comments) out += "comment " + c + "\n";
  out += "element vertex " + std::to_string(rows) + "\n";
  for (const auto& c : columns) out += std::string("property ") + type_name(c.type) + " " + c.name + "\n";
  out += "end_header\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double v = value(r, c);
      if (format == Format::kAscii) {
        if (c) out += ' ';
        encode_ascii(out, v, columns[c].type);
      } else {
        encode_binary(out, v, columns[c].type);
      }
    }
    if (format == Format::kAscii) out += '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed for " + path.string());
}

}  // namespace vafs::ply
