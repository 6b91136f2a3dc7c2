#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gdfm/types.hpp"

namespace gdfm::testing {

/// Cyclic Jacobi eigen solver; eigenvalues descending, vectors as columns.
void jacobi_eigen(const Matrix& a, Vector& values, Matrix& vectors);

/// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
Vector gauss_jordan_solve(Matrix a, Vector b);
Matrix gauss_jordan_inverse(const Matrix& a);

/// sum_k M^k Q M'^k truncated once the terms are negligible.
Matrix lyapunov_series(const Matrix& m, const Matrix& q);

/// Bartlett-weighted long-run variance of the rows of `scores`, by loops.
Matrix naive_newey_west(const Matrix& scores, Index bandwidth);

/// Canonical correlations between the column spaces of a and b.
Vector canonical_correlations(const Matrix& a, const Matrix& b);

/// Sorted-copy type 7 quantile.
double naive_quantile(std::vector<double> v, double prob);

/// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Every regular file below `root`, as paths relative to it, sorted.
std::vector<std::string> list_files(const std::filesystem::path& root);

}  // namespace gdfm::testing
