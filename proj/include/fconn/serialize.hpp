#pragma once

#include "fconn/factor.hpp"
#include "fconn/precision.hpp"
#include "fconn/sparsevar.hpp"

#include <json.hpp>

namespace fconn {

// Matrices travel as {"rows": R, "cols": C, "data": [row-major values]}.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FactorModelFit& fit);
nlohmann::json to_json(const SparseVarFit& fit);
nlohmann::json to_json(const RegularizedPrecision& prec);

FactorModelFit factor_fit_from_json(const nlohmann::json& j);
SparseVarFit sparse_fit_from_json(const nlohmann::json& j);

}  // namespace fconn
