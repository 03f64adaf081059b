#pragma once

#include <string>
#include <vector>

#include "flipbias/dataset.hpp"

namespace flipbias {

/// Column schema for plain numeric CSV datasets (no quoting). With a header,
/// columns are located by name; without one, the file must hold the feature
/// columns first, in schema order, followed by the label column. Ids are not
/// stored: load assigns row indices 0..n-1.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::string label_column = "label";
  bool has_header = true;
};

/// Convenience schema "x0".."x<dim-1>" + "label", the layout save_csv and the
/// generator CLI emit.
CsvSchema default_schema(std::size_t feature_dim);

/// Parses under the schema. Malformed cells, wrong column counts, missing
/// columns and non-binary labels throw with the file line number and column
/// name in the message.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes features with 17 significant digits so load(save(x)) round-trips
/// values exactly; row order is preserved.
void save_csv(const Dataset& data, const std::string& path, const CsvSchema& schema);

}  // namespace flipbias
