#include "qnk/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace qnk {

namespace {

std::string lower_copy(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

MatrixMarketData read_matrix_market_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("matrix market: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("matrix market: empty file " + path);
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (lower_copy(tag) != "%%matrixmarket" || lower_copy(object) != "matrix")
    throw std::runtime_error("matrix market: malformed banner in " + path);
  if (lower_copy(format) != "coordinate")
    throw std::runtime_error("matrix market: only coordinate format is supported");
  const std::string f = lower_copy(field);
  if (f != "real" && f != "integer")
    throw std::runtime_error("matrix market: only real-valued matrices are supported");
  if (lower_copy(symmetry) != "symmetric")
    throw std::runtime_error("matrix market: matrix must be declared symmetric");

  // skip comments
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(sizes >> rows >> cols >> nnz))
    throw std::runtime_error("matrix market: malformed size line in " + path);
  if (rows != cols) throw std::runtime_error("matrix market: matrix is not square");
  if (rows <= 0 || nnz < 0) throw std::runtime_error("matrix market: invalid sizes");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(nnz));
  long read = 0;
  while (read < nnz && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    long i = 0, j = 0;
    double v = 0;
    if (!(entry >> i >> j >> v))
      throw std::runtime_error("matrix market: malformed entry in " + path);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw std::runtime_error("matrix market: index out of bounds in " + path);
    if (i < j) std::swap(i, j);  // store the lower triangle
    triplets.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    ++read;
  }
  if (read != nnz) throw std::runtime_error("matrix market: fewer entries than declared");

  MatrixMarketData data;
  data.n = static_cast<Index>(rows);
  data.stored_entries = static_cast<Index>(nnz);
  data.lower.resize(rows, cols);
  data.lower.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
  data.name = std::filesystem::path(path).stem().string();
  return data;
}

SymmetricOperator<double> read_matrix_market(const std::string& path) {
  auto data = std::make_shared<MatrixMarketData>(read_matrix_market_data(path));
  return SymmetricOperator<double>(data->n, [data](const Vector<double>& v) -> Vector<double> {
    return data->lower.selfadjointView<Eigen::Lower>() * v;
  });
}

}  // namespace qnk
