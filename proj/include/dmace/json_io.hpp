// Copyright 2026 The dmace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON encoding of complex scalars and matrices. Complex numbers are
// [re, im] pairs; matrices are {"rows", "cols", "data"} with data in
// column-major order.

#ifndef DMACE_JSON_IO_HPP
#define DMACE_JSON_IO_HPP

#include <json.hpp>

#include <string>

#include "dmace/errors.hpp"
#include "dmace/tensor.hpp"

namespace dmace::json_io {

using Json = nlohmann::json;

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ComplexMatrix& m) {
  Json data = Json::array();
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) data.push_back(to_json(m(i, j)));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

// Looks up a required member, reporting the dotted field path on failure.
inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError("missing field '" + path + key + "'", 0);
  return j.at(key);
}

inline Complex complex_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError("field '" + field + "' must be a [re, im] pair", 0);
  return {j[0].get<double>(), j[1].get<double>()};
}

inline ComplexMatrix matrix_from_json(const Json& j, const std::string& field) {
  const auto rows = require(j, "rows", field + ".").get<Index>();
  const auto cols = require(j, "cols", field + ".").get<Index>();
  const Json& data = require(j, "data", field + ".");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Index>(data.size()) != rows * cols)
    throw ParseError("field '" + field + "' has inconsistent size", 0);
  ComplexMatrix m(rows, cols);
  Index n = 0;
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r, ++n) m(r, c) = complex_from_json(data[static_cast<std::size_t>(n)], field);
  return m;
}

}  // namespace dmace::json_io

#endif  // DMACE_JSON_IO_HPP
