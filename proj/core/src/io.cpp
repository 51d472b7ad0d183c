#include "hotkit/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hotkit {

using nlohmann::json;

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

json parse_json(std::string_view text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
}

[[noreturn]] void field_error(const std::string& source, const std::string& field,
                              const std::string& what) {
  throw ParseError(source + ": field '" + field + "': " + what);
}

const json& require_field(const json& obj, const char* key, const std::string& source) {
  if (!obj.is_object()) field_error(source, key, "document is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(source, key, "missing");
  return *it;
}

std::uint64_t as_index(const json& v, const std::string& source, const std::string& field) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    field_error(source, field, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

template <class T>
void put_le(std::string& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <class T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw MissingInput(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ThoughtGraph parse_thought_graph(std::string_view text, const std::string& source) {
  const json doc = parse_json(text, source);
  ThoughtGraph g;
  const json& thoughts = require_field(doc, "thoughts", source);
  if (!thoughts.is_array()) field_error(source, "thoughts", "expected an array");
  for (std::size_t i = 0; i < thoughts.size(); ++i) {
    if (!thoughts[i].is_string()) {
      field_error(source, "thoughts[" + std::to_string(i) + "]", "expected a string");
    }
    g.thoughts.push_back(thoughts[i].get<std::string>());
  }
  const json& triples = require_field(doc, "triples", source);
  if (!triples.is_array()) field_error(source, "triples", "expected an array");
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const std::string field = "triples[" + std::to_string(i) + "]";
    const json& t = triples[i];
    if (!t.is_array() || t.size() != 3) field_error(source, field, "expected [head, relation, tail]");
    const auto head = as_index(t[0], source, field + "[0]");
    const auto tail = as_index(t[2], source, field + "[2]");
    if (!t[1].is_string() || t[1].get<std::string>().empty()) {
      field_error(source, field + "[1]", "expected a non-empty relation string");
    }
    if (head >= g.thoughts.size()) field_error(source, field + "[0]", "head index out of range");
    if (tail >= g.thoughts.size()) field_error(source, field + "[2]", "tail index out of range");
    g.triples.push_back({static_cast<VertexId>(head), t[1].get<std::string>(),
                         static_cast<VertexId>(tail)});
  }
  return g;
}

std::string dump_thought_graph(const ThoughtGraph& g) {
  json doc;
  doc["thoughts"] = g.thoughts;
  json triples = json::array();
  for (const auto& t : g.triples) triples.push_back(json::array({t.head, t.relation, t.tail}));
  doc["triples"] = std::move(triples);
  return doc.dump(2) + "\n";
}

ThoughtGraph read_thought_graph(const std::filesystem::path& path) {
  return parse_thought_graph(read_file(path), path.string());
}

void write_thought_graph(const std::filesystem::path& path, const ThoughtGraph& g) {
  write_file(path, dump_thought_graph(g));
}

Hypergraph parse_hypergraph(std::string_view text, const std::string& source) {
  const json doc = parse_json(text, source);
  Hypergraph h;
  h.num_vertices = as_index(require_field(doc, "num_vertices", source), source, "num_vertices");
  const json& edges = require_field(doc, "edges", source);
  if (!edges.is_array()) field_error(source, "edges", "expected an array");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string field = "edges[" + std::to_string(e) + "]";
    const json& members = require_field(edges[e], "members", source + " " + field);
    if (!members.is_array()) field_error(source, field + ".members", "expected an array");
    Hyperedge edge;
    for (std::size_t i = 0; i < members.size(); ++i) {
      edge.members.push_back(static_cast<VertexId>(
          as_index(members[i], source, field + ".members[" + std::to_string(i) + "]")));
    }
    if (auto it = edges[e].find("label"); it != edges[e].end()) {
      if (!it->is_string()) field_error(source, field + ".label", "expected a string");
      edge.label = it->get<std::string>();
    }
    h.edges.push_back(std::move(edge));
  }
  // Repeated members are legal (walks may revisit a thought).
  for (const auto& v : validate(h)) {
    if (v.kind == Violation::Kind::duplicate_member) continue;
    field_error(source, "edges[" + std::to_string(v.edge) + "]", v.detail);
  }
  return h;
}

std::string dump_hypergraph(const Hypergraph& h) {
  json doc;
  doc["num_vertices"] = h.num_vertices;
  json edges = json::array();
  for (const auto& e : h.edges) edges.push_back({{"members", e.members}, {"label", e.label}});
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

Hypergraph read_hypergraph(const std::filesystem::path& path) {
  return parse_hypergraph(read_file(path), path.string());
}

void write_hypergraph(const std::filesystem::path& path, const Hypergraph& h) {
  write_file(path, dump_hypergraph(h));
}

std::string encode_matrix_binary(const Matrix& m) {
  if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw ShapeError("matrix too large for HOTM");
  std::string out(kMatrixMagic);
  out.reserve(12 + 8 * m.size());
  put_le(out, static_cast<std::uint32_t>(m.rows()));
  put_le(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) put_le(out, v);
  return out;
}

Matrix decode_matrix_binary(std::string_view bytes, const std::string& source) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kMatrixMagic) {
    throw ParseError(source + ": not a HOTM matrix (bad magic)");
  }
  const auto rows = get_le<std::uint32_t>(bytes.data() + 4);
  const auto cols = get_le<std::uint32_t>(bytes.data() + 8);
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != 12 + 8 * count) {
    throw ParseError(source + ": HOTM payload is " + std::to_string(bytes.size() - 12) +
                     " bytes, header says " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = get_le<double>(bytes.data() + 12 + 8 * i);
  return Matrix(rows, cols, std::move(data));
}

std::string encode_matrix_csv(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ',';
      const int n = std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

Matrix decode_matrix_csv(std::string_view text, const std::string& source) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(source + ": line 1: missing \"rows,cols\" header");

  auto split = [](std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return fields;
  };
  auto number = [&](std::string_view field, std::size_t line, std::size_t col, auto& out) {
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw ParseError(source + ": line " + std::to_string(line) + ", field " +
                       std::to_string(col) + ": cannot parse '" + std::string(field) + "'");
    }
  };

  const auto header = split(lines[0]);
  if (header.size() != 2) throw ParseError(source + ": line 1: expected \"rows,cols\" header");
  std::size_t rows = 0;
  std::size_t cols = 0;
  number(header[0], 1, 1, rows);
  number(header[1], 1, 2, cols);
  if (lines.size() - 1 != rows) {
    throw ParseError(source + ": header declares " + std::to_string(rows) + " rows, found " +
                     std::to_string(lines.size() - 1));
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fields = split(lines[r + 1]);
    if (fields.size() != cols) {
      throw ParseError(source + ": line " + std::to_string(r + 2) + ": expected " +
                       std::to_string(cols) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) number(fields[c], r + 2, c + 1, m(r, c));
  }
  return m;
}

Matrix read_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return is_csv(path) ? decode_matrix_csv(bytes, path.string())
                      : decode_matrix_binary(bytes, path.string());
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  write_file(path, is_csv(path) ? encode_matrix_csv(m) : encode_matrix_binary(m));
}

}  // namespace hotkit
