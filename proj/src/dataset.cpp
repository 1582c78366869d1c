#include "cerfgp/dataset.hpp"

#include "cerfgp/csv.hpp"
#include "cerfgp/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

namespace cerfgp {

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      fail(ErrorCode::Input, std::string("non-finite ") + what + " at row " +
                                 std::to_string(i));
    }
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

Dataset::Dataset(Eigen::VectorXd y, Eigen::VectorXd w, Eigen::MatrixXd c,
                 std::vector<std::string> covariate_names, CodeBook code_book)
    : y_(std::move(y)),
      w_(std::move(w)),
      c_(std::move(c)),
      names_(std::move(covariate_names)),
      code_book_(std::move(code_book)) {
  const auto n = w_.size();
  if (y_.size() != n || c_.rows() != n) {
    fail(ErrorCode::Input, "outcome, exposure and covariate row counts differ");
  }
  if (n < 2) {
    fail(ErrorCode::DatasetTooSmall,
         "dataset needs at least 2 observations, got " + std::to_string(n));
  }
  if (c_.cols() < 1) fail(ErrorCode::Input, "dataset needs at least one covariate");
  if (names_.empty()) {
    for (Eigen::Index r = 0; r < c_.cols(); ++r) names_.push_back("c" + std::to_string(r + 1));
  }
  if (static_cast<Eigen::Index>(names_.size()) != c_.cols()) {
    fail(ErrorCode::Input, "covariate name count does not match covariate columns");
  }
  std::set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size()) fail(ErrorCode::Schema, "duplicate covariate labels");
  check_finite(y_, "outcome");
  check_finite(w_, "exposure");
  for (Eigen::Index r = 0; r < c_.cols(); ++r) {
    check_finite(c_.col(r), "covariate");
  }
}

Dataset Dataset::from_observations(std::span<const Observation> rows,
                                   std::vector<std::string> covariate_names) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = rows.empty() ? 0 : rows.front().c.size();
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& obs = rows[static_cast<std::size_t>(i)];
    if (obs.c.size() != p) {
      fail(ErrorCode::Input, "observation " + std::to_string(i) +
                                 " has a different covariate count");
    }
    y[i] = obs.y;
    w[i] = obs.w;
    c.row(i) = obs.c.transpose();
  }
  return Dataset(std::move(y), std::move(w), std::move(c), std::move(covariate_names));
}

Observation Dataset::observation(Eigen::Index i) const {
  if (i < 0 || i >= size()) fail(ErrorCode::Index, "observation index out of range");
  return {y_[i], w_[i], c_.row(i).transpose()};
}

Dataset Dataset::with_outcomes(Eigen::VectorXd y) const {
  return Dataset(std::move(y), w_, c_, names_, code_book_);
}

Dataset Dataset::with_exposures(Eigen::VectorXd w) const {
  return Dataset(y_, std::move(w), c_, names_, code_book_);
}

Dataset Dataset::with_covariates(Eigen::MatrixXd c, std::vector<std::string> names) const {
  return Dataset(y_, w_, std::move(c), std::move(names));
}

Dataset Dataset::subset(std::span<const Eigen::Index> rows) const {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, c_.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = rows[static_cast<std::size_t>(k)];
    if (i < 0 || i >= size()) fail(ErrorCode::Index, "subset row out of range");
    y[k] = y_[i];
    w[k] = w_[i];
    c.row(k) = c_.row(i);
  }
  return Dataset(std::move(y), std::move(w), std::move(c), names_, code_book_);
}

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::Io, "data file does not exist: " + path.string());
  }
  const auto table = csv::read(path);

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
      fail(ErrorCode::Schema, "column '" + name + "' not found in header of " + path.string());
    }
    return static_cast<std::size_t>(it - table.header.begin());
  };

  if (schema.outcome.empty()) fail(ErrorCode::Schema, "schema has no outcome column");
  if (schema.exposure.empty()) fail(ErrorCode::Schema, "schema has no exposure column");
  if (schema.covariates.empty()) fail(ErrorCode::Schema, "schema lists no covariate columns");

  const auto y_col = column_of(schema.outcome);
  const auto w_col = column_of(schema.exposure);
  std::vector<std::size_t> c_cols;
  for (const auto& name : schema.covariates) c_cols.push_back(column_of(name));
  for (const auto& name : schema.categorical) {
    if (std::find(schema.covariates.begin(), schema.covariates.end(), name) ==
        schema.covariates.end()) {
      fail(ErrorCode::Schema, "categorical column '" + name + "' is not a listed covariate");
    }
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n < 2) {
    fail(ErrorCode::DatasetTooSmall,
         "dataset needs at least 2 rows, got " + std::to_string(n));
  }
  const auto p = static_cast<Eigen::Index>(c_cols.size());
  Eigen::VectorXd y(n), w(n);
  Eigen::MatrixXd c(n, p);
  Dataset::CodeBook code_book;
  std::vector<std::unordered_map<std::string, int>> level_maps(static_cast<std::size_t>(p));
  std::vector<bool> is_categorical(static_cast<std::size_t>(p), false);
  for (Eigen::Index r = 0; r < p; ++r) {
    const auto& name = schema.covariates[static_cast<std::size_t>(r)];
    if (std::find(schema.categorical.begin(), schema.categorical.end(), name) !=
        schema.categorical.end()) {
      is_categorical[static_cast<std::size_t>(r)] = true;
      code_book[name];
    }
  }

  auto numeric = [&](const csv::Row& row, std::size_t col, Eigen::Index i) {
    if (col >= row.size()) {
      fail(ErrorCode::Parse, "row " + std::to_string(i) + " is missing column '" +
                                 table.header[col] + "'");
    }
    double v = 0.0;
    if (!parse_double(row[col], v)) {
      fail(ErrorCode::Parse, "non-numeric value '" + row[col] + "' in column '" +
                                 table.header[col] + "' at row " + std::to_string(i));
    }
    return v;
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    y[i] = numeric(row, y_col, i);
    w[i] = numeric(row, w_col, i);
    for (Eigen::Index r = 0; r < p; ++r) {
      const auto col = c_cols[static_cast<std::size_t>(r)];
      if (!is_categorical[static_cast<std::size_t>(r)]) {
        c(i, r) = numeric(row, col, i);
        continue;
      }
      if (col >= row.size()) {
        fail(ErrorCode::Parse, "row " + std::to_string(i) + " is missing column '" +
                                   table.header[col] + "'");
      }
      const std::string level(trim(row[col]));
      if (level.empty()) {
        fail(ErrorCode::Parse, "missing level in column '" + table.header[col] +
                                   "' at row " + std::to_string(i));
      }
      auto& levels = level_maps[static_cast<std::size_t>(r)];
      auto [it, inserted] = levels.try_emplace(level, static_cast<int>(levels.size()));
      if (inserted) code_book[table.header[col]].push_back(level);
      c(i, r) = it->second;
    }
  }
  return Dataset(std::move(y), std::move(w), std::move(c), schema.covariates,
                 std::move(code_book));
}

void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  const std::string& outcome_name, const std::string& exposure_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  csv::Row header{outcome_name, exposure_name};
  for (const auto& name : data.covariate_names()) header.push_back(name);
  csv::write_row(out, header);

  const auto& book = data.code_book();
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    csv::Row row{csv::format_number(data.y()[i], 17), csv::format_number(data.w()[i], 17)};
    for (Eigen::Index r = 0; r < data.num_covariates(); ++r) {
      const auto& name = data.covariate_names()[static_cast<std::size_t>(r)];
      const double v = data.c()(i, r);
      auto it = book.find(name);
      if (it != book.end()) {
        const auto code = static_cast<std::size_t>(v);
        row.push_back(code < it->second.size() ? it->second[code] : csv::format_number(v, 17));
      } else {
        row.push_back(csv::format_number(v, 17));
      }
    }
    csv::write_row(out, row);
  }
}

CsvSchema schema_for(const Dataset& data, const std::string& outcome_name,
                     const std::string& exposure_name) {
  CsvSchema schema{outcome_name, exposure_name, data.covariate_names(), {}};
  for (const auto& [name, levels] : data.code_book()) schema.categorical.push_back(name);
  return schema;
}

Standardization standardize(std::span<const double> values) {
  const auto n = values.size();
  if (n < 2) fail(ErrorCode::DatasetTooSmall, "standardize needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean))) {
    fail(ErrorCode::ZeroVariance, "cannot standardize a constant vector");
  }
  Standardization out;
  out.mean = mean;
  out.sd = sd;
  out.values.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.values[static_cast<Eigen::Index>(i)] = (values[i] - mean) / sd;
  return out;
}

Standardization standardize(const Eigen::VectorXd& values) {
  return standardize(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

StandardizedCoords standardize_coords(const Eigen::VectorXd& w, const Eigen::VectorXd& s) {
  auto ws = standardize(w);
  auto ss = standardize(s);
  return {std::move(ws.values), std::move(ss.values), ws.mean, ws.sd, ss.mean, ss.sd};
}

}  // namespace cerfgp
