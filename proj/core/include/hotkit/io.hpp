#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hotkit/hypergraph.hpp"
#include "hotkit/numerics.hpp"
#include "hotkit/textual_hot.hpp"

namespace hotkit {

/// Bad user input: missing file, unparsable content, invalid configuration.
/// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingInput : public InputError {
 public:
  explicit MissingInput(const std::filesystem::path& path)
      : InputError("no such input: " + path.string()) {}
};

/// Message carries the source name and the line and/or field at fault.
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// ThoughtGraph: {"thoughts": [text...], "triples": [[head, relation, tail]...]}
ThoughtGraph parse_thought_graph(std::string_view text, const std::string& source = "<memory>");
std::string dump_thought_graph(const ThoughtGraph& g);
ThoughtGraph read_thought_graph(const std::filesystem::path& path);
void write_thought_graph(const std::filesystem::path& path, const ThoughtGraph& g);

// Hypergraph: {"num_vertices": n, "edges": [{"members": [ids], "label": text}...]}
Hypergraph parse_hypergraph(std::string_view text, const std::string& source = "<memory>");
std::string dump_hypergraph(const Hypergraph& h);
Hypergraph read_hypergraph(const std::filesystem::path& path);
void write_hypergraph(const std::filesystem::path& path, const Hypergraph& h);

// Matrix, binary: "HOTM", u32 LE rows, u32 LE cols, rows·cols f64 LE row-major.
inline constexpr std::string_view kMatrixMagic = "HOTM";
std::string encode_matrix_binary(const Matrix& m);
Matrix decode_matrix_binary(std::string_view bytes, const std::string& source = "<memory>");

// Matrix, text: a "rows,cols" header line then one comma-separated line per
// row. Values are printed with 17 significant digits, so reads are exact.
std::string encode_matrix_csv(const Matrix& m);
Matrix decode_matrix_csv(std::string_view text, const std::string& source = "<memory>");

/// Format chosen by extension: ".csv" is text, anything else binary.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// One 1×n matrix file per named tensor, "<name>.hotm", inside `dir`.
template <class P>
void save_checkpoint(const std::filesystem::path& dir, const P& params) {
  std::filesystem::create_directories(dir);
  for_each_tensor(params, [&](const std::string& name, std::span<const double> t) {
    write_matrix(dir / (name + ".hotm"), Matrix::row_vector(t));
  });
}

/// Loads into an already-shaped parameter struct; every tensor must be present
/// with the expected length.
template <class P>
void load_checkpoint(const std::filesystem::path& dir, P& params) {
  for_each_tensor(params, [&](const std::string& name, std::span<double> t) {
    const Matrix m = read_matrix(dir / (name + ".hotm"));
    if (m.size() != t.size()) {
      throw InputError("checkpoint tensor " + name + " has " + std::to_string(m.size()) +
                       " values, expected " + std::to_string(t.size()));
    }
    std::copy(m.values().begin(), m.values().end(), t.begin());
  });
}

}  // namespace hotkit
