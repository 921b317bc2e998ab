#pragma once

#include <Eigen/SparseCore>

#include <string>

#include "qnk/core.hpp"

namespace qnk {

/// Sparse symmetric matrix read from a MatrixMarket coordinate file.
/// Only the lower triangle is stored; the operator mirrors it.
struct MatrixMarketData {
  Index n = 0;
  Index stored_entries = 0;
  Eigen::SparseMatrix<double> lower;
  std::string name;
};

/// Parses a coordinate, real, symmetric MatrixMarket file ('%' comments,
/// 1-based indices). Rejects nonsquare sizes, out-of-bounds indices, and
/// any symmetry declaration other than "symmetric".
MatrixMarketData read_matrix_market_data(const std::string& path);

SymmetricOperator<double> read_matrix_market(const std::string& path);

}  // namespace qnk
