#pragma once

#include <Eigen/Dense>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fmgraph/error.hpp"
#include "fmgraph/graph.hpp"
#include "fmgraph/report.hpp"
#include "fmgraph/solver.hpp"
#include "fmgraph/spectral.hpp"

// File formats
//
// Dense matrix, text:   optional '#' comment lines, then `matrix <m> <n>`,
//                       then m lines of n whitespace-separated decimals written
//                       in shortest round-trip form.
// Dense matrix, binary: magic bytes `FVMD1`, m and n as little-endian uint64,
//                       then m*n little-endian IEEE-754 doubles, row-major.
// Spectral basis:       a dense matrix with k columns and n+1 rows; the first
//                       row holds the eigenvalues, the rest the eigenvectors.
// Graph edge list:      `# nodes <N>` header (mandatory), then one `i j weight`
//                       line per undirected edge, 0-indexed; `#` lines are
//                       comments.
// Report:               `report_version 1`, `timestamp`, `wall_seconds` header
//                       lines, then `[config]` and `[metrics]` key-value
//                       sections and an `[iterations]` CSV table.

namespace fmgraph {

class RaggedRowError : public ParseError {
 public:
  using ParseError::ParseError;
};

class NonNumericError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyInputError : public DataError {
 public:
  explicit EmptyInputError(const std::string& source) : DataError(source + ": no data rows") {}
};

class MissingFileError : public DataError {
 public:
  explicit MissingFileError(const std::string& path) : DataError(path + ": file not found") {}
};

class VersionError : public DataError {
 public:
  using DataError::DataError;
};

/// Train and test supports overlap.
class DisjointnessError : public DataError {
 public:
  using DataError::DataError;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_long(std::string_view s, long& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  if (!std::filesystem::exists(path)) throw MissingFileError(path);
  std::ifstream in(path, mode);
  if (!in) throw DataError(path + ": cannot open for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  return out;
}

inline void write_le_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline bool read_le_u64(std::istream& is, std::uint64_t& v) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Delimited text

/// Reads a rectangular numeric table. Blank lines are skipped.
inline Matrix parse_dense_csv(std::istream& in, const std::string& source, bool has_header = false,
                              char delimiter = ',') {
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  bool header_pending = has_header;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::string_view rest(line);
    long col = 0;
    while (true) {
      ++col;
      const auto pos = rest.find(delimiter);
      const std::string_view cell = rest.substr(0, pos);
      double v = 0.0;
      if (!detail::parse_double(cell, v)) {
        throw NonNumericError(source, lineno, col, "non-numeric cell '" + std::string(detail::trim(cell)) + "'");
      }
      row.push_back(v);
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw RaggedRowError(source, lineno, 0,
                           "ragged row: expected " + std::to_string(width) + " fields, got " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInputError(source);
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return out;
}

inline Matrix load_dense_csv(const std::string& path, bool has_header = false, char delimiter = ',') {
  auto in = detail::open_in(path);
  return parse_dense_csv(in, path, has_header, delimiter);
}

/// One integer label per line; blank and '#' lines ignored.
inline std::vector<int> load_labels(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<int> labels;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    long v = 0;
    if (!detail::parse_long(t, v)) throw NonNumericError(path, lineno, 1, "label is not an integer");
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw EmptyInputError(path);
  return labels;
}

// ---------------------------------------------------------------------------
// Dense matrix container

enum class MatrixFormat { text, binary };

inline constexpr char kBinaryMagic[] = {'F', 'V', 'M', 'D', '1'};

inline void write_matrix(std::ostream& os, const Matrix& M, MatrixFormat format,
                         const std::vector<std::string>& comments = {}) {
  if (format == MatrixFormat::binary) {
    os.write(kBinaryMagic, sizeof(kBinaryMagic));
    detail::write_le_u64(os, static_cast<std::uint64_t>(M.rows()));
    detail::write_le_u64(os, static_cast<std::uint64_t>(M.cols()));
    for (Index i = 0; i < M.rows(); ++i) {
      for (Index j = 0; j < M.cols(); ++j) detail::write_le_u64(os, std::bit_cast<std::uint64_t>(M(i, j)));
    }
    return;
  }
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "matrix " << M.rows() << ' ' << M.cols() << '\n';
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is, const std::string& source) {
  char magic[sizeof(kBinaryMagic)] = {};
  is.read(magic, sizeof(magic));
  if (is.gcount() == static_cast<std::streamsize>(sizeof(magic)) &&
      std::memcmp(magic, kBinaryMagic, sizeof(magic)) == 0) {
    std::uint64_t m = 0, n = 0;
    if (!detail::read_le_u64(is, m) || !detail::read_le_u64(is, n)) {
      throw ParseError(source, 0, 0, "truncated binary matrix header");
    }
    Matrix M(static_cast<Index>(m), static_cast<Index>(n));
    for (Index i = 0; i < M.rows(); ++i) {
      for (Index j = 0; j < M.cols(); ++j) {
        std::uint64_t bits = 0;
        if (!detail::read_le_u64(is, bits)) throw ParseError(source, 0, 0, "truncated binary matrix payload");
        M(i, j) = std::bit_cast<double>(bits);
      }
    }
    return M;
  }
  is.clear();
  is.seekg(0);

  std::string line;
  long lineno = 0;
  Index m = -1, n = -1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = detail::split_ws(t);
    long a = 0, b = 0;
    if (f.size() != 3 || f[0] != "matrix" || !detail::parse_long(f[1], a) || !detail::parse_long(f[2], b) ||
        a < 0 || b < 0) {
      throw ParseError(source, lineno, 0, "expected header 'matrix <rows> <cols>'");
    }
    m = a;
    n = b;
    break;
  }
  if (m < 0) throw EmptyInputError(source);
  Matrix M(m, n);
  Index row = 0;
  while (row < m && std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = detail::split_ws(t);
    if (static_cast<Index>(f.size()) != n) {
      throw RaggedRowError(source, lineno, 0,
                           "expected " + std::to_string(n) + " values, got " + std::to_string(f.size()));
    }
    for (Index j = 0; j < n; ++j) {
      double v = 0.0;
      if (!detail::parse_double(f[static_cast<std::size_t>(j)], v)) {
        throw NonNumericError(source, lineno, j + 1, "non-numeric value '" + std::string(f[static_cast<std::size_t>(j)]) + "'");
      }
      M(row, j) = v;
    }
    ++row;
  }
  if (row < m) throw ParseError(source, lineno, 0, "expected " + std::to_string(m) + " rows, got " + std::to_string(row));
  return M;
}

inline void save_matrix(const std::string& path, const Matrix& M, MatrixFormat format = MatrixFormat::text,
                        const std::vector<std::string>& comments = {}) {
  auto os = detail::open_out(path, format == MatrixFormat::binary ? std::ios::binary : std::ios::out);
  write_matrix(os, M, format, comments);
  if (!os) throw DataError(path + ": write failed");
}

/// Reads either container variant (detected from the magic bytes).
inline Matrix load_matrix(const std::string& path) {
  auto in = detail::open_in(path, std::ios::in | std::ios::binary);
  return read_matrix(in, path);
}

inline void save_basis(const std::string& path, const SpectralBasis& b, MatrixFormat format = MatrixFormat::text) {
  Matrix M(b.size() + 1, b.dim());
  M.row(0) = b.values.transpose();
  M.bottomRows(b.size()) = b.vectors;
  save_matrix(path, M, format,
              {"spectral basis: first row holds the eigenvalues, the remaining rows the eigenvectors"});
}

inline SpectralBasis load_basis(const std::string& path) {
  const Matrix M = load_matrix(path);
  if (M.rows() < 1) throw DataError(path + ": basis file has no eigenvalue row");
  return {M.bottomRows(M.rows() - 1), M.row(0).transpose()};
}

// ---------------------------------------------------------------------------
// Graph edge lists

inline void write_edge_list(std::ostream& os, const WeightedGraph& g) {
  os << "# nodes " << g.size() << '\n';
  for (const auto& e : g.edges()) os << e.row() << ' ' << e.col() << ' ' << format_double(e.value()) << '\n';
}

inline WeightedGraph read_edge_list(std::istream& is, const std::string& source) {
  std::string line;
  long lineno = 0;
  long nodes = -1;
  std::vector<Triplet> edges;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto f = detail::split_ws(t.substr(1));
      if (f.size() == 2 && f[0] == "nodes") {
        if (!detail::parse_long(f[1], nodes) || nodes < 0) throw ParseError(source, lineno, 0, "bad node count");
      }
      continue;
    }
    if (nodes < 0) throw ParseError(source, lineno, 0, "edge before mandatory '# nodes N' header");
    const auto f = detail::split_ws(t);
    long i = 0, j = 0;
    double w = 0.0;
    if (f.size() != 3) throw ParseError(source, lineno, 0, "expected 'i j weight'");
    if (!detail::parse_long(f[0], i) || !detail::parse_long(f[1], j)) {
      throw NonNumericError(source, lineno, 0, "node index is not an integer");
    }
    if (!detail::parse_double(f[2], w)) throw NonNumericError(source, lineno, 3, "weight is not a number");
    if (i < 0 || j < 0 || i >= nodes || j >= nodes) throw ParseError(source, lineno, 0, "node index out of range");
    if (i == j) throw ParseError(source, lineno, 0, "self-loop");
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParseError(source, lineno, 3, "weight must be finite and >= 0");
    if (w > 0.0) edges.emplace_back(i, j, w);
  }
  if (nodes < 0) throw ParseError(source, 0, 0, "missing '# nodes N' header");
  return WeightedGraph::from_edges(nodes, edges);
}

inline void save_graph(const std::string& path, const WeightedGraph& g) {
  auto os = detail::open_out(path);
  write_edge_list(os, g);
  if (!os) throw DataError(path + ": write failed");
}

inline WeightedGraph load_graph(const std::string& path) {
  auto in = detail::open_in(path);
  return read_edge_list(in, path);
}

// ---------------------------------------------------------------------------
// MovieLens-100K

enum class SplitTag { train, test, all };

struct RatingsDataset {
  MaskedMatrix masked;
  /// index -> external id
  std::vector<long> row_ids;
  std::vector<long> col_ids;
  /// external id -> index
  std::unordered_map<long, Index> row_index;
  std::unordered_map<long, Index> col_index;
  SplitTag split = SplitTag::all;

  Index row_of(long external) const {
    const auto it = row_index.find(external);
    if (it == row_index.end()) throw DataError("unknown row id " + std::to_string(external));
    return it->second;
  }
  Index col_of(long external) const {
    const auto it = col_index.find(external);
    if (it == col_index.end()) throw DataError("unknown column id " + std::to_string(external));
    return it->second;
  }
};

namespace detail {

struct RatingLine {
  long user;
  long item;
  double rating;
};

inline std::vector<RatingLine> read_ratings(const std::string& path, long users, long items) {
  auto in = open_in(path);
  std::vector<RatingLine> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_ws(line);
    if (f.size() != 4) throw ParseError(path, lineno, 0, "expected 'user item rating timestamp'");
    long u = 0, i = 0, r = 0, ts = 0;
    if (!parse_long(f[0], u) || !parse_long(f[1], i) || !parse_long(f[2], r) || !parse_long(f[3], ts)) {
      throw NonNumericError(path, lineno, 0, "non-integer field");
    }
    if (u < 1 || u > users) throw ParseError(path, lineno, 1, "user id " + std::to_string(u) + " out of range");
    if (i < 1 || i > items) throw ParseError(path, lineno, 2, "item id " + std::to_string(i) + " out of range");
    if (r < 1 || r > 5) throw ParseError(path, lineno, 3, "rating " + std::to_string(r) + " outside 1..5");
    out.push_back({u, i, static_cast<double>(r)});
  }
  return out;
}

/// Reads `<n> users` / `<n> items` from u.info; falls back to the canonical sizes.
inline std::pair<long, long> movielens_sizes(const std::filesystem::path& dir) {
  long users = 943, items = 1682;
  const auto info = dir / "u.info";
  if (!std::filesystem::exists(info)) return {users, items};
  std::ifstream in(info);
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split_ws(line);
    long v = 0;
    if (f.size() == 2 && parse_long(f[0], v)) {
      if (f[1] == "users") users = v;
      if (f[1] == "items") items = v;
    }
  }
  return {users, items};
}

inline RatingsDataset ratings_dataset(const std::vector<RatingLine>& lines, long users, long items, SplitTag tag,
                                      const std::string& source) {
  RatingsDataset ds;
  ds.split = tag;
  for (long u = 1; u <= users; ++u) {
    ds.row_index[u] = static_cast<Index>(ds.row_ids.size());
    ds.row_ids.push_back(u);
  }
  for (long i = 1; i <= items; ++i) {
    ds.col_index[i] = static_cast<Index>(ds.col_ids.size());
    ds.col_ids.push_back(i);
  }
  Matrix v = Matrix::Zero(users, items);
  Matrix s = Matrix::Zero(users, items);
  for (const auto& r : lines) {
    const Index a = ds.row_index.at(r.user);
    const Index b = ds.col_index.at(r.item);
    if (s(a, b) != 0.0) {
      throw DataError(source + ": duplicate rating for user " + std::to_string(r.user) + ", item " +
                      std::to_string(r.item));
    }
    v(a, b) = r.rating;
    s(a, b) = 1.0;
  }
  ds.masked = MaskedMatrix(std::move(v), std::move(s));
  return ds;
}

}  // namespace detail

inline void check_disjoint(const RatingsDataset& a, const RatingsDataset& b) {
  if (a.masked.rows() != b.masked.rows() || a.masked.cols() != b.masked.cols()) {
    throw DimensionMismatch("ratings datasets have different shapes");
  }
  const Index overlap = static_cast<Index>(a.masked.mask.cwiseProduct(b.masked.mask).sum());
  if (overlap > 0) {
    throw DisjointnessError("train and test supports share " + std::to_string(overlap) + " entries");
  }
}

/**
 * Loads `<split>.base` / `<split>.test` (default u1, the 80k/20k split) from a
 * MovieLens-100K directory as users x items masked matrices.
 */
inline std::pair<RatingsDataset, RatingsDataset> load_movielens_100k(const std::string& dir,
                                                                     const std::string& split = "u1") {
  const std::filesystem::path root(dir);
  if (!std::filesystem::is_directory(root)) throw MissingFileError(dir);
  const auto [users, items] = detail::movielens_sizes(root);
  const std::string base = (root / (split + ".base")).string();
  const std::string test = (root / (split + ".test")).string();
  auto train_ds = detail::ratings_dataset(detail::read_ratings(base, users, items), users, items, SplitTag::train, base);
  auto test_ds = detail::ratings_dataset(detail::read_ratings(test, users, items), users, items, SplitTag::test, test);
  check_disjoint(train_ds, test_ds);
  return {std::move(train_ds), std::move(test_ds)};
}

/**
 * KNN graphs over the users (rows) and items (columns) of the zero-filled
 * training matrix. With `center`, observed ratings are shifted by their mean
 * before embedding.
 */
inline std::pair<WeightedGraph, WeightedGraph> build_rating_graphs(const RatingsDataset& train, Index K = 10,
                                                                   bool center = false) {
  if (train.masked.observed_count() == 0) throw DataError("build_rating_graphs: training set is empty");
  Matrix features = train.masked.values;
  if (center) {
    const double mean = features.sum() / train.masked.mask.sum();
    features = (features.array() - mean).matrix().cwiseProduct(train.masked.mask);
  }
  return {knn_graph(features, K), knn_graph(features.transpose(), K)};
}

// ---------------------------------------------------------------------------
// Experiment reports

inline void write_report(std::ostream& os, const ExperimentReport& r) {
  auto check_key = [](const std::string& k) {
    if (k.empty() || k.find_first_of(" \t\r\n=") != std::string::npos) {
      throw InvalidArgument("report key '" + k + "' must be non-empty without whitespace or '='");
    }
  };
  os << "report_version " << kReportVersion << '\n';
  os << "timestamp " << r.timestamp << '\n';
  os << "wall_seconds " << format_double(r.wall_seconds) << '\n';
  os << "[config]\n";
  for (const auto& [k, v] : r.config) {
    check_key(k);
    if (v.find_first_of("\r\n") != std::string::npos) throw InvalidArgument("report value for '" + k + "' spans lines");
    os << k << " = " << v << '\n';
  }
  os << "[metrics]\n";
  for (const auto& [k, v] : r.metrics) {
    check_key(k);
    os << k << " = " << format_double(v) << '\n';
  }
  os << "[iterations]\n";
  os << "iter,train_objective,val_rmse\n";
  for (const auto& it : r.iterations) {
    os << it.iter << ',' << format_double(it.train_objective) << ',' << format_double(it.val_rmse) << '\n';
  }
}

inline ExperimentReport read_report(std::istream& is, const std::string& source) {
  ExperimentReport r;
  std::string line;
  long lineno = 0;
  auto next = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (!detail::trim(line).empty()) return true;
    }
    return false;
  };
  if (!next()) throw EmptyInputError(source);
  {
    const auto f = detail::split_ws(line);
    long v = 0;
    if (f.size() != 2 || f[0] != "report_version" || !detail::parse_long(f[1], v)) {
      throw ParseError(source, lineno, 0, "expected 'report_version <n>'");
    }
    if (v != kReportVersion) {
      throw VersionError(source + ": unsupported report_version " + std::to_string(v) + " (expected " +
                         std::to_string(kReportVersion) + ")");
    }
  }
  enum class Section { header, config, metrics, iterations } section = Section::header;
  bool table_header_seen = false;
  while (next()) {
    const std::string_view t = detail::trim(line);
    if (t == "[config]") { section = Section::config; continue; }
    if (t == "[metrics]") { section = Section::metrics; continue; }
    if (t == "[iterations]") { section = Section::iterations; continue; }
    switch (section) {
      case Section::header: {
        const auto sp = t.find(' ');
        const auto key = t.substr(0, sp);
        const auto value = sp == std::string_view::npos ? std::string_view{} : detail::trim(t.substr(sp + 1));
        if (key == "timestamp") {
          r.timestamp = std::string(value);
        } else if (key == "wall_seconds") {
          if (!detail::parse_double(value, r.wall_seconds)) throw NonNumericError(source, lineno, 0, "bad wall_seconds");
        } else {
          throw ParseError(source, lineno, 0, "unknown header field '" + std::string(key) + "'");
        }
        break;
      }
      case Section::config:
      case Section::metrics: {
        // Values keep their exact text after the separator (possibly empty).
        const std::string_view raw(line);
        auto eq = raw.find(" = ");
        std::string_view value;
        if (eq != std::string_view::npos) {
          value = raw.substr(eq + 3);
        } else if (raw.size() >= 2 && raw.substr(raw.size() - 2) == " =") {
          eq = raw.size() - 2;
        } else {
          throw ParseError(source, lineno, 0, "expected 'key = value'");
        }
        const std::string key(detail::trim(raw.substr(0, eq)));
        if (section == Section::config) {
          r.config[key] = std::string(value);
        } else {
          double v = 0.0;
          if (!detail::parse_double(value, v)) throw NonNumericError(source, lineno, 0, "metric is not a number");
          r.metrics[key] = v;
        }
        break;
      }
      case Section::iterations: {
        if (!table_header_seen) {
          if (t != "iter,train_objective,val_rmse") throw ParseError(source, lineno, 0, "bad iteration table header");
          table_header_seen = true;
          break;
        }
        std::string_view rest = t;
        std::string_view cells[3];
        for (int c = 0; c < 3; ++c) {
          const auto pos = rest.find(',');
          if ((pos == std::string_view::npos) != (c == 2)) throw ParseError(source, lineno, 0, "expected 3 columns");
          cells[c] = rest.substr(0, pos);
          if (pos != std::string_view::npos) rest.remove_prefix(pos + 1);
        }
        IterationRecord rec;
        if (!detail::parse_long(cells[0], rec.iter) || !detail::parse_double(cells[1], rec.train_objective) ||
            !detail::parse_double(cells[2], rec.val_rmse)) {
          throw NonNumericError(source, lineno, 0, "bad iteration row");
        }
        r.iterations.push_back(rec);
        break;
      }
    }
  }
  return r;
}

inline void save_report(const std::string& path, const ExperimentReport& r) {
  auto os = detail::open_out(path);
  write_report(os, r);
  if (!os) throw DataError(path + ": write failed");
}

inline ExperimentReport load_report(const std::string& path) {
  auto in = detail::open_in(path);
  return read_report(in, path);
}

}  // namespace fmgraph
