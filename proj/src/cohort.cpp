#include "aucshift/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace aucshift {

const char* to_string(Role role) {
  switch (role) {
    case Role::validation: return "validation";
    case Role::rwd: return "rwd";
    case Role::target_sample: return "target-sample";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_real(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    fail(ErrorCode::BadValue, "non-numeric value '" + cell + "' in column '" +
                                  col + "', data row " + std::to_string(row));
  return v;
}

double parse_binary(const std::string& cell, std::size_t row, const std::string& col) {
  if (cell == "0") return 0.0;
  if (cell == "1") return 1.0;
  fail(ErrorCode::BadValue, "response must be the literal 0 or 1, got '" +
                                cell + "' in column '" + col + "', data row " +
                                std::to_string(row));
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

void check_invariants(const Cohort& c) {
  const Eigen::Index n = c.n();
  if (n == 0) fail(ErrorCode::EmptyCohort, "cohort has no usable rows");
  bool needs_y = c.role == Role::validation;
  bool needs_d = c.role == Role::validation || c.role == Role::rwd;
  if (needs_y && !c.y)
    fail(ErrorCode::MissingColumn, "validation cohort requires a biomarker column");
  if (needs_d && !c.d)
    fail(ErrorCode::MissingColumn, std::string(to_string(c.role)) +
                                       " cohort requires a response column");
  if (c.y && c.y->size() != n)
    fail(ErrorCode::DimensionMismatch, "biomarker length mismatch");
  if (c.d && c.d->size() != n)
    fail(ErrorCode::DimensionMismatch, "response length mismatch");
  if (c.design_weight && c.design_weight->size() != n)
    fail(ErrorCode::DimensionMismatch, "design-weight length mismatch");
  if (static_cast<Eigen::Index>(c.column_names.size()) != c.p())
    fail(ErrorCode::DimensionMismatch, "column_names length mismatch");
  if (!c.x.allFinite())
    fail(ErrorCode::BadValue, "covariates contain non-finite values");
  if (c.y && !c.y->allFinite())
    fail(ErrorCode::BadValue, "biomarker contains non-finite values");
  if (c.d) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = (*c.d)(i);
      if (v != 0.0 && v != 1.0)
        fail(ErrorCode::BadValue, "response must be 0 or 1");
    }
  }
  if (c.design_weight) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double w = (*c.design_weight)(i);
      if (!(w > 0.0) || !std::isfinite(w))
        fail(ErrorCode::BadValue, "design weights must be positive reals");
    }
  }
  if (needs_d && c.d) {
    double first = (*c.d)(0);
    bool constant = true;
    for (Eigen::Index i = 1; i < n; ++i)
      if ((*c.d)(i) != first) { constant = false; break; }
    if (constant)
      fail(ErrorCode::DegenerateResponse,
           "response indicator is constant; both classes are required");
  }
}

}  // namespace

Cohort make_cohort(Eigen::MatrixXd x, std::optional<Eigen::VectorXd> y,
                   std::optional<Eigen::VectorXd> d,
                   std::optional<Eigen::VectorXd> design_weight, Role role,
                   std::vector<std::string> column_names) {
  Cohort c;
  c.x = std::move(x);
  c.y = std::move(y);
  c.d = std::move(d);
  c.design_weight = std::move(design_weight);
  c.role = role;
  c.column_names = std::move(column_names);
  check_invariants(c);
  return c;
}

Cohort load_cohort(const std::string& path, Role role, const Schema& schema) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadValue, "cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::EmptyCohort, "empty file: " + path);
  const std::vector<std::string> header = split_csv_line(line);

  if (schema.x_columns.empty())
    fail(ErrorCode::MissingColumn, "schema names no covariate columns");
  std::vector<int> x_idx;
  for (const auto& name : schema.x_columns) {
    int idx = find_column(header, name);
    if (idx < 0) fail(ErrorCode::MissingColumn, "covariate column '" + name +
                                                    "' not found in " + path);
    x_idx.push_back(idx);
  }
  const bool needs_y = role == Role::validation;
  const bool needs_d = role == Role::validation || role == Role::rwd;
  int y_idx = -1, d_idx = -1, w_idx = -1;
  if (needs_y) {
    if (!schema.y_column)
      fail(ErrorCode::MissingColumn, "role validation requires a biomarker column mapping");
    y_idx = find_column(header, *schema.y_column);
    if (y_idx < 0) fail(ErrorCode::MissingColumn, "biomarker column '" +
                                                      *schema.y_column + "' not found");
  }
  if (needs_d) {
    if (!schema.d_column)
      fail(ErrorCode::MissingColumn, std::string("role ") + to_string(role) +
                                         " requires a response column mapping");
    d_idx = find_column(header, *schema.d_column);
    if (d_idx < 0) fail(ErrorCode::MissingColumn, "response column '" +
                                                      *schema.d_column + "' not found");
  }
  if (schema.weight_column) {
    w_idx = find_column(header, *schema.weight_column);
    if (w_idx < 0) fail(ErrorCode::MissingColumn, "design-weight column '" +
                                                      *schema.weight_column + "' not found");
  }

  const std::size_t p = schema.x_columns.size();
  std::vector<double> xs, ys, ds, ws;
  std::size_t data_row = 0, dropped = 0;
  std::vector<double> row_x(p);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      fail(ErrorCode::BadValue, "data row " + std::to_string(data_row) + " has " +
                                    std::to_string(cells.size()) + " cells, header has " +
                                    std::to_string(header.size()));
    // Empty required cells drop the row (missing-data exclusion policy);
    // malformed non-empty cells are hard errors.
    bool missing = false;
    for (std::size_t k = 0; k < p && !missing; ++k)
      missing = cells[static_cast<std::size_t>(x_idx[k])].empty();
    if (y_idx >= 0 && cells[static_cast<std::size_t>(y_idx)].empty()) missing = true;
    if (d_idx >= 0 && cells[static_cast<std::size_t>(d_idx)].empty()) missing = true;
    if (w_idx >= 0 && cells[static_cast<std::size_t>(w_idx)].empty()) missing = true;
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t k = 0; k < p; ++k)
      row_x[k] = parse_real(cells[static_cast<std::size_t>(x_idx[k])], data_row,
                            schema.x_columns[k]);
    xs.insert(xs.end(), row_x.begin(), row_x.end());
    if (y_idx >= 0)
      ys.push_back(parse_real(cells[static_cast<std::size_t>(y_idx)], data_row,
                              *schema.y_column));
    if (d_idx >= 0)
      ds.push_back(parse_binary(cells[static_cast<std::size_t>(d_idx)], data_row,
                                *schema.d_column));
    if (w_idx >= 0) {
      double w = parse_real(cells[static_cast<std::size_t>(w_idx)], data_row,
                            *schema.weight_column);
      if (!(w > 0.0))
        fail(ErrorCode::BadValue, "design weight must be positive, got " +
                                      std::to_string(w) + " at data row " +
                                      std::to_string(data_row));
      ws.push_back(w);
    }
  }

  const std::size_t n = xs.size() / p;
  if (n == 0)
    fail(ErrorCode::EmptyCohort, "no usable rows in " + path +
                                     (dropped ? " (" + std::to_string(dropped) +
                                                    " dropped for missing cells)"
                                              : ""));

  Cohort c;
  c.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k)
      c.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i * p + k];
  if (y_idx >= 0)
    c.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  if (d_idx >= 0)
    c.d = Eigen::Map<Eigen::VectorXd>(ds.data(), static_cast<Eigen::Index>(ds.size()));
  if (w_idx >= 0)
    c.design_weight =
        Eigen::Map<Eigen::VectorXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
  c.role = role;
  c.column_names = schema.x_columns;
  c.n_dropped_rows = dropped;
  check_invariants(c);
  return c;
}

void write_cohort_csv(const Cohort& cohort, const std::string& path) {
  const std::string tmp = path + ".tmp";
  std::ofstream out(tmp);
  if (!out) fail(ErrorCode::BadValue, "cannot open for writing: " + tmp);
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < cohort.column_names.size(); ++k) {
    if (k) out << ",";
    out << cohort.column_names[k];
  }
  if (cohort.y) out << ",y";
  if (cohort.d) out << ",d";
  if (cohort.design_weight) out << ",design_weight";
  out << "\n";
  for (Eigen::Index i = 0; i < cohort.n(); ++i) {
    for (Eigen::Index k = 0; k < cohort.p(); ++k) {
      if (k) out << ",";
      put(cohort.x(i, k));
    }
    if (cohort.y) {
      out << ",";
      put((*cohort.y)(i));
    }
    if (cohort.d) out << "," << static_cast<int>((*cohort.d)(i));
    if (cohort.design_weight) {
      out << ",";
      put((*cohort.design_weight)(i));
    }
    out << "\n";
  }
  out.flush();
  if (!out.good()) {
    out.close();
    std::remove(tmp.c_str());
    fail(ErrorCode::BadValue, "failed while writing: " + tmp);
  }
  out.close();
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorCode::BadValue, "cannot move output into place at: " + path);
  }
}

void check_compatibility(const Cohort& a, const Cohort& b) {
  if (a.column_names == b.column_names) return;
  std::ostringstream msg;
  msg << "covariate schemas differ: [";
  for (std::size_t i = 0; i < a.column_names.size(); ++i)
    msg << (i ? "," : "") << a.column_names[i];
  msg << "] vs [";
  for (std::size_t i = 0; i < b.column_names.size(); ++i)
    msg << (i ? "," : "") << b.column_names[i];
  msg << "]";
  fail(ErrorCode::SchemaMismatch, msg.str());
}

}  // namespace aucshift
