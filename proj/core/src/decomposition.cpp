#include "gdfm/decomposition.hpp"

#include <fstream>

#include "gdfm/csv.hpp"
#include "gdfm/errors.hpp"

namespace gdfm {

namespace {

Matrix project(const Matrix& target, const Matrix& basis) {
  Eigen::ColPivHouseholderQR<Matrix> qr(basis);
  if (qr.rank() < basis.cols()) throw SingularDesignError("factor matrix is rank deficient");
  return basis * qr.solve(target);
}

double centered_cov(const Vector& a, const Vector& b) {
  const double t = static_cast<double>(a.size());
  return (a.array() - a.mean()).matrix().dot((b.array() - b.mean()).matrix()) / t;
}

}  // namespace

StaticComponent static_cc(const Matrix& y, const Matrix& factors) {
  if (factors.cols() < 1) throw InputError("static_cc: at least one factor is required");
  if (factors.rows() != y.rows()) throw InputError("static_cc: factors and panel have different row counts");
  Eigen::ColPivHouseholderQR<Matrix> qr(factors);
  if (qr.rank() < factors.cols()) throw SingularDesignError("static_cc: factor matrix is rank deficient");
  StaticComponent out;
  out.loadings = qr.solve(y).transpose();
  out.common = factors * out.loadings.transpose();
  return out;
}

Matrix weak_cc(const Matrix& chi_hat, const Matrix& c_hat) {
  if (chi_hat.rows() != c_hat.rows() || chi_hat.cols() != c_hat.cols()) {
    throw InputError("weak_cc: shape mismatch");
  }
  return chi_hat - c_hat;
}

Decomposition decompose(const Matrix& y, const Matrix& factors, const Matrix& chi_hat) {
  if (y.rows() != chi_hat.rows() || y.cols() != chi_hat.cols()) throw InputError("decompose: chi_hat shape mismatch");
  if (factors.rows() != y.rows()) throw InputError("decompose: factors and panel have different row counts");
  if (factors.cols() < 1) throw InputError("decompose: at least one factor is required");
  Decomposition d;
  d.y = y;
  d.chi = chi_hat;
  Matrix basis(factors.rows(), factors.cols() + 1);
  basis << Vector::Ones(factors.rows()), factors;
  d.common = project(chi_hat, basis);
  d.weak = weak_cc(chi_hat, d.common);
  d.xi = y - chi_hat;
  return d;
}

std::vector<VarianceShare> variance_shares(const Decomposition& d) {
  std::vector<VarianceShare> out;
  for (Index i = 0; i < d.y.cols(); ++i) {
    const Vector y = d.y.col(i);
    const double vy = centered_cov(y, y);
    if (!(vy > 0.0)) throw DomainError("variance_shares: series " + std::to_string(i) + " has zero variance");
    VarianceShare s;
    s.series = i < static_cast<Index>(d.series_ids.size()) ? d.series_ids[static_cast<std::size_t>(i)]
                                                           : "y" + std::to_string(i + 1);
    const Vector c = d.common.col(i), w = d.weak.col(i), chi = d.chi.col(i), xi = d.xi.col(i);
    s.share_common = centered_cov(c, c) / vy;
    s.share_weak = centered_cov(w, w) / vy;
    s.share_chi = centered_cov(chi, chi) / vy;
    s.share_xi = centered_cov(xi, xi) / vy;
    s.cov_common_weak = centered_cov(c, w) / vy;
    s.cov_chi_xi = centered_cov(chi, xi) / vy;
    out.push_back(std::move(s));
  }
  return out;
}

void write_shares(const std::filesystem::path& path, const std::vector<VarianceShare>& shares) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "series,share_C,share_weak,share_chi,share_xi,cov_C_weak,cov_chi_xi\n";
  for (const auto& s : shares) {
    out << csv::escape(s.series) << ',' << csv::format_double(s.share_common) << ','
        << csv::format_double(s.share_weak) << ',' << csv::format_double(s.share_chi) << ','
        << csv::format_double(s.share_xi) << ',' << csv::format_double(s.cov_common_weak) << ','
        << csv::format_double(s.cov_chi_xi) << '\n';
  }
}

void write_decomposition(const std::filesystem::path& dir, const Decomposition& d) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> ids = d.series_ids;
  for (Index i = static_cast<Index>(ids.size()); i < d.y.cols(); ++i) ids.push_back("y" + std::to_string(i + 1));
  csv::write_matrix(dir / "C_hat.csv", d.common, ids, d.time_index);
  csv::write_matrix(dir / "e_chi_hat.csv", d.weak, ids, d.time_index);
  csv::write_matrix(dir / "chi_hat.csv", d.chi, ids, d.time_index);
  csv::write_matrix(dir / "xi_hat.csv", d.xi, ids, d.time_index);
  write_shares(dir / "shares.csv", variance_shares(d));
}

}  // namespace gdfm
