#include "flipbias/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flipbias {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding spaces
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') {
    cells.push_back("");
  }
  return cells;
}

double parse_double(const std::string& cell, const std::string& path,
                    std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                             ": cell '" + cell + "' in column '" + column +
                             "' is not a finite number");
  }
  return value;
}

}  // namespace

CsvSchema default_schema(std::size_t feature_dim) {
  CsvSchema schema;
  schema.feature_columns.reserve(feature_dim);
  for (std::size_t j = 0; j < feature_dim; ++j) {
    schema.feature_columns.push_back("x" + std::to_string(j));
  }
  return schema;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.feature_columns.empty()) {
    throw std::invalid_argument("csv: schema has no feature columns");
  }
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("csv: cannot read " + path);
  }

  const std::size_t dim = schema.feature_columns.size();
  std::vector<std::size_t> feature_idx(dim);
  std::size_t label_idx = dim;
  std::size_t expected_cells = dim + 1;
  std::size_t line_no = 0;
  std::string line;

  if (schema.has_header) {
    if (!std::getline(in, line)) {
      throw std::runtime_error(path + ": empty file, expected a header row");
    }
    ++line_no;
    const std::vector<std::string> header = split_row(line);
    auto find = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
          return i;
        }
      }
      throw std::runtime_error(path + ": missing column '" + name + "'");
    };
    for (std::size_t j = 0; j < dim; ++j) {
      feature_idx[j] = find(schema.feature_columns[j]);
    }
    label_idx = find(schema.label_column);
    expected_cells = header.size();
  } else {
    for (std::size_t j = 0; j < dim; ++j) {
      feature_idx[j] = j;
    }
  }

  std::vector<Example> examples;
  ExampleId next_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != expected_cells) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(expected_cells) + " cells, found " +
                               std::to_string(cells.size()));
    }
    Example ex;
    ex.id = next_id++;
    ex.features.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      ex.features[j] =
          parse_double(cells[feature_idx[j]], path, line_no, schema.feature_columns[j]);
    }
    const std::string& label_cell = cells[label_idx];
    if (label_cell == "0") {
      ex.label = 0;
    } else if (label_cell == "1") {
      ex.label = 1;
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": label cell '" +
                               label_cell + "' in column '" + schema.label_column +
                               "' must be 0 or 1");
    }
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }
  const std::size_t feature_dim = dim;
  return Dataset(std::move(examples), feature_dim);
}

void save_csv(const Dataset& data, const std::string& path, const CsvSchema& schema) {
  if (schema.feature_columns.size() != data.feature_dim()) {
    throw std::invalid_argument("csv: schema has " +
                                std::to_string(schema.feature_columns.size()) +
                                " feature columns, dataset has " +
                                std::to_string(data.feature_dim()));
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("csv: cannot write " + path);
  }
  if (schema.has_header) {
    for (const std::string& name : schema.feature_columns) {
      out << name << ',';
    }
    out << schema.label_column << '\n';
  }
  char buf[64];
  for (const Example& ex : data.examples()) {
    for (double v : ex.features) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    out << ex.label << '\n';
  }
  if (!out.good()) {
    throw std::runtime_error("csv: write failed for " + path);
  }
}

}  // namespace flipbias
