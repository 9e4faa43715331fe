#pragma once

#include <string>

#include "json.hpp"
#include "riplab/dense.hpp"

namespace riplab {

using Json = nlohmann::json;

/// {"rows": R, "cols": C, "entries": [...]} with entries row-major.
inline Json matrix_to_json(const Matrix& m) {
  const DenseMatrix dm = DenseMatrix::from_eigen(m);
  return Json{{"rows", dm.rows}, {"cols", dm.cols}, {"entries", dm.entries}};
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries"))
    throw ValidationError("matrix JSON must carry rows, cols and entries");
  DenseMatrix dm;
  dm.rows = j.at("rows").get<std::size_t>();
  dm.cols = j.at("cols").get<std::size_t>();
  dm.entries = j.at("entries").get<std::vector<double>>();
  return dm.to_eigen();
}

inline Json vector_to_json(const Vector& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  return Json(out);
}

inline Json factor_pair_to_json(const FactorPair& fp) {
  return Json{{"X", matrix_to_json(fp.X)}, {"Z", matrix_to_json(fp.Z)}};
}

inline FactorPair factor_pair_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("X") || !j.contains("Z"))
    throw ValidationError("factor pair JSON must carry X and Z");
  FactorPair fp{matrix_from_json(j.at("X")), matrix_from_json(j.at("Z"))};
  if (fp.X.rows() != fp.Z.rows())
    throw ValidationError("factor pair: X and Z must have the same number of rows");
  return fp;
}

}  // namespace riplab
