#include "attkit/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "attkit/errors.hpp"

namespace attkit {

namespace {

// One logical CSV record; handles quoted fields, embedded commas/newlines,
// and doubled quotes. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>* fields) {
  fields->clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields->push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field += ch;
    }
  }
  if (!any) return false;
  fields->push_back(std::move(field));
  return true;
}

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& cell, int row, const std::string& col) {
  const std::string t = trimmed(cell);
  if (t.empty()) {
    throw ValidationError("row " + std::to_string(row) + ", column '" + col +
                          "': missing value");
  }
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) {
    throw ValidationError("row " + std::to_string(row) + ", column '" + col +
                          "': '" + t + "' is not a number");
  }
  return value;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace

Dataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::vector<std::string> header;
  if (!read_record(in, &header)) {
    throw ValidationError("csv input is empty");
  }
  for (auto& h : header) h = trimmed(h);
  std::unordered_map<std::string, int> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!position.emplace(header[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate column '" + header[i] + "' in header");
    }
  }
  const auto find_column = [&](const std::string& name) {
    const auto it = position.find(name);
    if (it == position.end()) {
      std::string available;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) available += ", ";
        available += header[i];
      }
      throw ValidationError("column '" + name + "' not found; header has: " +
                            available);
    }
    return it->second;
  };

  const int treatment_col = find_column(schema.treatment);
  const int outcome_col = find_column(schema.outcome);
  int id_col = -1;
  if (!schema.id.empty()) {
    id_col = find_column(schema.id);
  } else if (position.count("id") > 0) {
    id_col = position.at("id");
  }

  std::vector<std::string> covariate_names = schema.covariates;
  if (covariate_names.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      const int col = static_cast<int>(i);
      if (col == treatment_col || col == outcome_col || col == id_col) continue;
      covariate_names.push_back(header[i]);
    }
    if (covariate_names.empty()) {
      throw ValidationError("no covariate columns left after role assignment");
    }
  }
  std::vector<int> covariate_cols;
  for (const auto& name : covariate_names) {
    covariate_cols.push_back(find_column(name));
  }

  std::vector<Unit> units;
  std::vector<std::string> fields;
  int row = 0;
  while (read_record(in, &fields)) {
    ++row;
    if (fields.size() == 1 && trimmed(fields[0]).empty()) continue;  // blank line
    if (fields.size() != header.size()) {
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    Unit unit;
    unit.id = id_col >= 0 ? trimmed(fields[static_cast<std::size_t>(id_col)])
                          : "r" + std::to_string(row);
    if (unit.id.empty()) {
      throw ValidationError("row " + std::to_string(row) + ", column '" +
                            (id_col >= 0 ? header[static_cast<std::size_t>(id_col)]
                                         : std::string("id")) +
                            "': empty id");
    }
    const std::string z = trimmed(fields[static_cast<std::size_t>(treatment_col)]);
    if (z == "1") {
      unit.treated = true;
    } else if (z == "0") {
      unit.treated = false;
    } else {
      throw ValidationError("row " + std::to_string(row) + ", column '" +
                            schema.treatment + "': treatment must be 0 or 1, got '" +
                            z + "'");
    }
    unit.outcome = parse_number(fields[static_cast<std::size_t>(outcome_col)],
                                row, schema.outcome);
    unit.covariates.resize(static_cast<int>(covariate_cols.size()));
    for (std::size_t j = 0; j < covariate_cols.size(); ++j) {
      unit.covariates(static_cast<int>(j)) = parse_number(
          fields[static_cast<std::size_t>(covariate_cols[j])], row,
          covariate_names[j]);
    }
    units.push_back(std::move(unit));
  }
  return Dataset::create(std::move(units), std::move(covariate_names));
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open '" + path + "'");
  }
  return parse_csv(in, schema);
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  out << "id,treatment,outcome";
  for (const auto& name : data.covariate_names()) out << "," << csv_escape(name);
  out << "\n";
  char buffer[64];
  for (int i = 0; i < data.n(); ++i) {
    const Unit& unit = data.unit(i);
    out << csv_escape(unit.id) << "," << (unit.treated ? 1 : 0);
    std::snprintf(buffer, sizeof(buffer), "%.17g", unit.outcome);
    out << "," << buffer;
    for (int j = 0; j < data.p(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", unit.covariates(j));
      out << "," << buffer;
    }
    out << "\n";
  }
  return out.str();
}

void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write '" + path + "'");
  }
  out << dataset_to_csv(data);
}

}  // namespace attkit
