#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "attkit/dataset.hpp"

namespace attkit {

// Column roles for CSV ingestion. Empty `covariates` selects every column
// not claimed by another role, in header order. Empty `id` uses a column
// literally named "id" when present, otherwise synthesizes r1, r2, ...
struct CsvSchema {
  std::string id;
  std::string treatment = "treatment";
  std::string outcome = "outcome";
  std::vector<std::string> covariates;
};

// RFC-4180-style parsing (quoted fields, escaped quotes). Errors cite the
// offending 1-based data row and column name. Treatment cells must be 0 or
// 1; every other configured cell must be numeric.
Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(std::istream& in, const CsvSchema& schema);

// id, treatment, outcome, then covariates; %.17g so doubles round-trip.
std::string dataset_to_csv(const Dataset& data);
void write_csv(const std::string& path, const Dataset& data);

}  // namespace attkit
