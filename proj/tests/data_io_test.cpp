#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "fmgraph/data_io.hpp"

using namespace fmgraph;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fmgraph_io_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name), std::ios::binary) << content;
    return path(name);
  }

  fs::path dir_;
};

class DataIo : public TempDir {};

template <class Fn>
long parse_error_line(Fn&& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_F(DataIo, CsvParsesWithHeaderAndBlankLines) {
  const std::string p = write("a.csv", "x,y,z\n1,2,3\n\n4.5, -6 ,7e-3\n");
  const Matrix m = load_dense_csv(p, true);
  ASSERT_EQ(m.rows(), 2);
  ASSERT_EQ(m.cols(), 3);
  EXPECT_EQ(m(1, 0), 4.5);
  EXPECT_EQ(m(1, 1), -6.0);
  EXPECT_EQ(m(1, 2), 7e-3);
}

TEST_F(DataIo, CsvErrorsCarryLocation) {
  const std::string ragged = write("r.csv", "1,2\n3,4\n5\n");
  EXPECT_THROW(load_dense_csv(ragged), RaggedRowError);
  EXPECT_EQ(parse_error_line([&] { load_dense_csv(ragged); }), 3);
  const std::string text = write("t.csv", "1,2\n3,abc\n");
  try {
    load_dense_csv(text);
    FAIL() << "expected NonNumericError";
  } catch (const NonNumericError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 2);
  }
  EXPECT_THROW(load_dense_csv(write("e.csv", "\n\n")), EmptyInputError);
  EXPECT_THROW(load_dense_csv(path("missing.csv")), MissingFileError);
}

TEST_F(DataIo, CsvSemicolonDelimiter) {
  const Matrix m = load_dense_csv(write("s.csv", "1;2\n3;4\n"), false, ';');
  EXPECT_EQ(m(1, 1), 4.0);
}

TEST_F(DataIo, Labels) {
  EXPECT_EQ(load_labels(write("l.txt", "# classes\n1\n2\n\n-3\n")), (std::vector<int>{1, 2, -3}));
  EXPECT_THROW(load_labels(write("bad.txt", "1\nx\n")), NonNumericError);
  EXPECT_THROW(load_labels(write("empty.txt", "")), EmptyInputError);
}

TEST_F(DataIo, MatrixRoundTripsBitExactInBothFormats) {
  Matrix m(3, 4);
  m << 0.1, -0.0, 1e-300, 5e-324, std::numeric_limits<double>::max(), 1.0 / 3.0, -2.5, 7, 0, 1, 2, 3;
  for (auto fmt : {MatrixFormat::text, MatrixFormat::binary}) {
    const std::string p = path(fmt == MatrixFormat::text ? "m.txt" : "m.bin");
    save_matrix(p, m, fmt);
    EXPECT_TRUE(same_bits(load_matrix(p), m));
  }
  save_matrix(path("e.bin"), Matrix(0, 5), MatrixFormat::binary);
  const Matrix e = load_matrix(path("e.bin"));
  EXPECT_EQ(e.rows(), 0);
  EXPECT_EQ(e.cols(), 5);
}

TEST_F(DataIo, BinaryLayoutIsLittleEndianRowMajor) {
  Matrix m(1, 2);
  m << 1.0, -2.0;
  std::ostringstream os;
  write_matrix(os, m, MatrixFormat::binary);
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 5u + 8 + 8 + 16);
  EXPECT_EQ(bytes.substr(0, 5), "FVMD1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 1);  // rows, least significant byte first
  EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 2);
  // 1.0 = 0x3FF0000000000000: last byte of the first value is 0x3F.
  EXPECT_EQ(static_cast<unsigned char>(bytes[21 + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(bytes[29 + 7]), 0xC0);
}

TEST_F(DataIo, HandWrittenTextMatrix) {
  const Matrix m = load_matrix(write("h.txt", "# produced by hand\nmatrix 2 2\n1 2\n# mid comment\n3 4.25\n"));
  Matrix expected(2, 2);
  expected << 1, 2, 3, 4.25;
  EXPECT_EQ(m, expected);
}

TEST_F(DataIo, MalformedMatrices) {
  EXPECT_THROW(load_matrix(write("a.txt", "matrix 2\n")), ParseError);
  EXPECT_THROW(load_matrix(write("b.txt", "matrix 2 2\n1 2\n")), ParseError);
  EXPECT_THROW(load_matrix(write("c.txt", "matrix 1 2\n1 2 3\n")), RaggedRowError);
  EXPECT_THROW(load_matrix(write("d.txt", "matrix 1 2\n1 z\n")), NonNumericError);
  std::string truncated = "FVMD1";
  truncated += std::string("\x02\0\0\0\0\0\0\0\x02\0\0\0\0\0\0\0", 16);
  truncated += std::string(8, '\0');
  EXPECT_THROW(load_matrix(write("e.bin", truncated)), ParseError);
}

TEST_F(DataIo, BasisRoundTrip) {
  SpectralBasis b{Matrix::Random(6, 3), Vector::LinSpaced(3, 0.0, 2.0)};
  for (auto fmt : {MatrixFormat::text, MatrixFormat::binary}) {
    save_basis(path("basis"), b, fmt);
    const SpectralBasis r = load_basis(path("basis"));
    EXPECT_TRUE(same_bits(r.vectors, b.vectors));
    EXPECT_TRUE(same_bits(r.values, b.values));
  }
}

TEST_F(DataIo, EdgeListRoundTrip) {
  const WeightedGraph g = WeightedGraph::from_edges(5, {{0, 1, 0.1}, {3, 1, 2.0 / 3.0}, {2, 4, 1e-7}});
  save_graph(path("g.txt"), g);
  const WeightedGraph r = load_graph(path("g.txt"));
  EXPECT_EQ(r.size(), 5);
  EXPECT_EQ(Matrix(r.adjacency()), Matrix(g.adjacency()));
  // Isolated trailing nodes survive because the node count is explicit.
  const WeightedGraph h = load_graph(write("h.txt", "# nodes 10\n0 1 1\n"));
  EXPECT_EQ(h.size(), 10);
}

TEST_F(DataIo, MalformedEdgeLists) {
  EXPECT_THROW(load_graph(write("a.txt", "0 1 1\n")), ParseError);
  EXPECT_THROW(load_graph(write("b.txt", "# nodes 3\n0 3 1\n")), ParseError);
  EXPECT_THROW(load_graph(write("c.txt", "# nodes 3\n1 1 1\n")), ParseError);
  EXPECT_THROW(load_graph(write("d.txt", "# nodes 3\n0 1 -1\n")), ParseError);
  EXPECT_THROW(load_graph(write("e.txt", "# nodes 3\n0 x 1\n")), NonNumericError);
  EXPECT_THROW(load_graph(write("f.txt", "# just a comment\n")), ParseError);
}

TEST_F(DataIo, MovieLensFixture) {
  const fs::path ml = dir_ / "ml";
  fs::create_directories(ml);
  std::ofstream(ml / "u.info") << "4 users\n5 items\n8 ratings\n";
  std::ofstream(ml / "u1.base") << "1\t1\t5\t881250949\n1\t2\t3\t881250949\n2\t3\t4\t1\n3\t5\t1\t1\n4\t4\t2\t1\n";
  std::ofstream(ml / "u1.test") << "1\t3\t4\t1\n2\t1\t2\t1\n4\t5\t5\t1\n";
  const auto [train, test] = load_movielens_100k(ml.string());
  EXPECT_EQ(train.masked.rows(), 4);
  EXPECT_EQ(train.masked.cols(), 5);
  EXPECT_EQ(train.masked.observed_count(), 5);
  EXPECT_EQ(test.masked.observed_count(), 3);
  EXPECT_EQ(train.masked.values(train.row_of(1), train.col_of(2)), 3.0);
  EXPECT_EQ(test.masked.values(test.row_of(4), test.col_of(5)), 5.0);
  EXPECT_EQ(train.split, SplitTag::train);
  EXPECT_THROW(train.row_of(9), DataError);
}

TEST_F(DataIo, MovieLensValidation) {
  const fs::path ml = dir_ / "ml";
  fs::create_directories(ml);
  std::ofstream(ml / "u.info") << "3 users\n3 items\n";
  auto write_split = [&](const std::string& base, const std::string& test) {
    std::ofstream(ml / "u1.base") << base;
    std::ofstream(ml / "u1.test") << test;
  };
  write_split("1 1 5 0\n", "1 1 4 0\n");
  EXPECT_THROW(load_movielens_100k(ml.string()), DisjointnessError);
  write_split("1 1 5 0\n1 1 4 0\n", "2 2 4 0\n");
  EXPECT_THROW(load_movielens_100k(ml.string()), DataError);
  write_split("1 1 6 0\n", "2 2 4 0\n");
  EXPECT_THROW(load_movielens_100k(ml.string()), ParseError);
  write_split("4 1 3 0\n", "2 2 4 0\n");
  EXPECT_THROW(load_movielens_100k(ml.string()), ParseError);
  write_split("1 1 x 0\n", "2 2 4 0\n");
  EXPECT_THROW(load_movielens_100k(ml.string()), NonNumericError);
  EXPECT_THROW(load_movielens_100k((dir_ / "nowhere").string()), MissingFileError);
  write_split("1 1 5 0\n", "2 2 4 0\n");
  fs::remove(ml / "u1.test");
  EXPECT_THROW(load_movielens_100k(ml.string()), MissingFileError);
}

TEST_F(DataIo, RatingGraphsHaveDatasetShape) {
  const fs::path ml = dir_ / "ml";
  fs::create_directories(ml);
  std::ofstream(ml / "u.info") << "6 users\n5 items\n";
  std::ofstream(ml / "u1.base") << "1 1 5 0\n2 1 4 0\n3 2 1 0\n4 3 2 0\n5 4 3 0\n6 5 5 0\n1 5 2 0\n";
  std::ofstream(ml / "u1.test") << "2 2 3 0\n";
  const auto [train, test] = load_movielens_100k(ml.string());
  const auto [rows, cols] = build_rating_graphs(train, 2);
  EXPECT_EQ(rows.size(), 6);
  EXPECT_EQ(cols.size(), 5);
}

TEST_F(DataIo, ReportRoundTripPreservesPayload) {
  ExperimentReport r;
  r.timestamp = "2026-01-01T00:00:00Z";
  r.wall_seconds = 1.25;
  r.config["mu"] = "1e-05";
  r.config["row_graph"] = "";
  r.config["path"] = "a b/c = d";
  r.metrics["test_rmse"] = 0.1 + 0.2;
  r.metrics["val_rmse"] = std::nan("");
  r.iterations.push_back({0, 12.5, 0.3});
  r.iterations.push_back({1, 11.0, std::nan("")});
  save_report(path("r.txt"), r);
  const ExperimentReport back = load_report(path("r.txt"));
  EXPECT_TRUE(payload_equal(r, back));
  EXPECT_EQ(back.timestamp, r.timestamp);
  EXPECT_EQ(back.wall_seconds, r.wall_seconds);

  ExperimentReport other = r;
  other.timestamp = "later";
  other.wall_seconds = 99.0;
  EXPECT_TRUE(payload_equal(r, other));
  other.metrics["test_rmse"] = 0.3;
  EXPECT_FALSE(payload_equal(r, other));
}

TEST_F(DataIo, ReportVersionChecked) {
  EXPECT_THROW(load_report(write("v.txt", "report_version 2\n[config]\n")), VersionError);
  EXPECT_THROW(load_report(write("w.txt", "version 1\n")), ParseError);
  ExperimentReport bad;
  bad.config["has space"] = "x";
  std::ostringstream os;
  EXPECT_THROW(write_report(os, bad), InvalidArgument);
}
