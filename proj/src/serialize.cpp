#include "fconn/serialize.hpp"

namespace fconn {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data")) {
    throw DomainError("matrix json: expected an object with rows, cols and data");
  }
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw DomainError("matrix json: data length does not match rows x cols");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<std::size_t>(i * cols + k)].get<double>();
  }
  return m;
}

namespace {

json list_to_json(const MatrixList& list) {
  json out = json::array();
  for (const auto& m : list) out.push_back(matrix_to_json(m));
  return out;
}

MatrixList list_from_json(const json& j) {
  if (!j.is_array()) throw DomainError("matrix list json: expected an array");
  MatrixList out;
  for (const auto& m : j) out.push_back(matrix_from_json(m));
  return out;
}

}  // namespace

json to_json(const FactorModelFit& fit) {
  return {{"loadings", matrix_to_json(fit.loadings)},
          {"factors", matrix_to_json(fit.factors)},
          {"var_coeffs", list_to_json(fit.factor_var_coeffs)},
          {"resid_cov", matrix_to_json(fit.factor_resid_cov)},
          {"idio_panel", matrix_to_json(fit.idio_panel)}};
}

json to_json(const SparseVarFit& fit) {
  return {{"coeffs", list_to_json(fit.coeffs)},
          {"residuals", matrix_to_json(fit.residuals)},
          {"resid_cov", matrix_to_json(fit.resid_cov)},
          {"lambdas", fit.lambdas}};
}

json to_json(const RegularizedPrecision& prec) {
  return {{"precision", matrix_to_json(prec.precision)},
          {"covariance", matrix_to_json(prec.covariance)},
          {"penalty", prec.penalty},
          {"duality_gap", prec.duality_gap},
          {"iterations", prec.iterations}};
}

FactorModelFit factor_fit_from_json(const json& j) {
  FactorModelFit fit;
  fit.loadings = matrix_from_json(j.at("loadings"));
  fit.factors = matrix_from_json(j.at("factors"));
  fit.factor_var_coeffs = list_from_json(j.at("var_coeffs"));
  fit.factor_resid_cov = matrix_from_json(j.at("resid_cov"));
  fit.idio_panel = matrix_from_json(j.at("idio_panel"));
  return fit;
}

SparseVarFit sparse_fit_from_json(const json& j) {
  SparseVarFit fit;
  fit.coeffs = list_from_json(j.at("coeffs"));
  fit.residuals = matrix_from_json(j.at("residuals"));
  fit.resid_cov = matrix_from_json(j.at("resid_cov"));
  fit.lambdas = j.at("lambdas").get<std::vector<double>>();
  return fit;
}

}  // namespace fconn
