#include "stein4dvar/io.hpp"

#include <unsupported/Eigen/SparseExtra>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace stein4dvar {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what, long line = 0) {
  std::string msg = path.string();
  if (line > 0) msg += ":" + std::to_string(line);
  throw IoError(msg + ": " + what);
}

struct Banner {
  bool array = false;
  bool symmetric = false;
};

Banner parse_banner(const std::filesystem::path& path, const std::string& line) {
  std::istringstream is(line);
  std::string tag, object, format, field, symmetry;
  is >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") fail(path, "missing Matrix Market banner", 1);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "double" && field != "integer") fail(path, "only real matrices are supported", 1);
  if (symmetry != "general" && symmetry != "symmetric") fail(path, "unsupported symmetry '" + symmetry + "'", 1);
  if (format != "array" && format != "coordinate") fail(path, "unsupported format '" + format + "'", 1);
  return {format == "array", symmetry == "symmetric"};
}

Matrix read_array(const std::filesystem::path& path, std::istream& in, long& lineno, bool symmetric) {
  std::string line;
  Index rows = -1, cols = -1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream is(line);
    if (rows < 0) {
      if (!(is >> rows >> cols) || rows < 0 || cols < 0) fail(path, "bad size line", lineno);
      continue;
    }
    double v;
    if (!(is >> v)) fail(path, "bad value", lineno);
    values.push_back(v);
  }
  if (rows < 0) fail(path, "missing size line");
  Matrix M = Matrix::Zero(rows, cols);
  if (!symmetric) {
    if (static_cast<Index>(values.size()) != rows * cols) fail(path, "wrong number of values");
    std::copy(values.begin(), values.end(), M.data());
    return M;
  }
  if (rows != cols || static_cast<Index>(values.size()) != rows * (rows + 1) / 2)
    fail(path, "wrong number of values for a symmetric array");
  std::size_t k = 0;
  for (Index j = 0; j < cols; ++j)
    for (Index i = j; i < rows; ++i) M(i, j) = M(j, i) = values[k++];
  return M;
}

}  // namespace

Matrix read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open file");
  std::string first;
  std::getline(in, first);
  const Banner banner = parse_banner(path, first);
  if (banner.array) {
    long lineno = 1;
    return read_array(path, in, lineno, banner.symmetric);
  }
  in.close();
  Eigen::SparseMatrix<double> sp;
  if (!Eigen::loadMarket(sp, path.string())) fail(path, "cannot parse coordinate data");
  Matrix M(sp);
  if (!banner.symmetric) return M;
  // loadMarket keeps only the stored triangle.
  if (M.rows() != M.cols()) fail(path, "symmetric matrix must be square");
  const Matrix diag = M.diagonal().asDiagonal();
  return M + M.transpose() - diag;
}

void write_matrix_market(const std::filesystem::path& path, const Matrix& M, const std::string& comment) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open file for writing");
  out << "%%MatrixMarket matrix array real general\n";
  if (!comment.empty()) out << "% " << comment << '\n';
  out << M.rows() << ' ' << M.cols() << '\n';
  char buf[32];
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", M(i, j));
      out << buf << '\n';
    }
  if (!out) fail(path, "write failed");
}

void write_block(const std::filesystem::path& path, const Matrix& Z) {
  write_matrix_market(path, Z, "block rows=" + std::to_string(Z.rows()) + " times=" + std::to_string(Z.cols()));
}

Matrix read_block(const std::filesystem::path& path, Index rows) {
  const Matrix Z = read_matrix_market(path);
  std::ifstream in(path);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("% block ", 0) != 0) continue;
    long r = -1, t = -1;
    if (std::sscanf(line.c_str(), "%% block rows=%ld times=%ld", &r, &t) != 2)
      fail(path, "malformed block header", lineno);
    if (r != Z.rows() || t != Z.cols()) fail(path, "block header disagrees with the size line", lineno);
    break;
  }
  if (rows >= 0 && Z.rows() != rows)
    fail(path, "expected " + std::to_string(rows) + " rows, found " + std::to_string(Z.rows()));
  return Z;
}

void save_system(const std::filesystem::path& dir, const SystemData& sys) {
  std::filesystem::create_directories(dir);
  write_matrix_market(dir / "B.mtx", sys.B());
  write_matrix_market(dir / "Q.mtx", sys.Q());
  write_matrix_market(dir / "R.mtx", sys.R());
  write_matrix_market(dir / "H.mtx", sys.H());
  for (Index i = 1; i <= sys.n_models(); ++i)
    write_matrix_market(dir / ("M_" + std::to_string(i) + ".mtx"), sys.model(i));
  write_block(dir / "b.mtx", sys.b().mat());
  write_block(dir / "d.mtx", sys.d().mat());
}

SystemData load_system(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(dir, "not a directory");
  Matrix B = read_matrix_market(dir / "B.mtx");
  Matrix Q = read_matrix_market(dir / "Q.mtx");
  Matrix R = read_matrix_market(dir / "R.mtx");
  Matrix H = read_matrix_market(dir / "H.mtx");
  const Index s = B.rows(), p = R.rows();
  Matrix b = read_block(dir / "b.mtx", s);
  Matrix d = read_block(dir / "d.mtx", p);
  const Index N = b.cols() - 1;
  if (N < 1) fail(dir / "b.mtx", "need at least two time columns");
  std::vector<Matrix> models;
  for (Index i = 1; i <= N; ++i) {
    const auto path = dir / ("M_" + std::to_string(i) + ".mtx");
    if (!std::filesystem::exists(path)) fail(path, "missing model file");
    models.push_back(read_matrix_market(path));
  }
  return SystemData(std::move(B), std::move(Q), std::move(R), std::move(H), std::move(models),
                    StateBlockMatrix(std::move(b)), ObsBlockMatrix(std::move(d)));
}

}  // namespace stein4dvar
