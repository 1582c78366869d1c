#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cerfgp {

struct Observation {
  double y = 0.0;
  double w = 0.0;
  Eigen::VectorXd c;
};

/// Column-role mapping for CSV ingestion. Columns listed in `categorical`
/// hold text levels that are encoded as integer codes (0, 1, ...) in order of
/// first appearance.
struct CsvSchema {
  std::string outcome;
  std::string exposure;
  std::vector<std::string> covariates;
  std::vector<std::string> categorical;
};

/// Exposure and covariates only. Tuning code receives this view so it has no
/// way to read outcomes.
struct DesignView {
  const Eigen::VectorXd& w;
  const Eigen::MatrixXd& c;
  Eigen::Index size() const { return w.size(); }
};

/// Observed (y, w, c) triples stored column-wise. Immutable once built.
class Dataset {
 public:
  using CodeBook = std::map<std::string, std::vector<std::string>>;

  Dataset(Eigen::VectorXd y, Eigen::VectorXd w, Eigen::MatrixXd c,
          std::vector<std::string> covariate_names, CodeBook code_book = {});

  static Dataset from_observations(std::span<const Observation> rows,
                                   std::vector<std::string> covariate_names);

  Eigen::Index size() const { return w_.size(); }
  Eigen::Index num_covariates() const { return c_.cols(); }

  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXd& w() const { return w_; }
  const Eigen::MatrixXd& c() const { return c_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  const CodeBook& code_book() const { return code_book_; }

  Observation observation(Eigen::Index i) const;
  DesignView design() const { return {w_, c_}; }

  /// Same design, different outcome vector (used for linearity and
  /// outcome-permutation checks).
  Dataset with_outcomes(Eigen::VectorXd y) const;
  Dataset with_exposures(Eigen::VectorXd w) const;
  Dataset with_covariates(Eigen::MatrixXd c,
                          std::vector<std::string> names) const;
  Dataset subset(std::span<const Eigen::Index> rows) const;

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXd w_;
  Eigen::MatrixXd c_;
  std::vector<std::string> names_;
  CodeBook code_book_;
};

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes the dataset with header (outcome, exposure, covariates...). Values
/// are rendered with round-trip precision; categorical covariates are written
/// back as their level labels.
void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  const std::string& outcome_name = "y",
                  const std::string& exposure_name = "w");

/// Schema matching the column names written by save_dataset.
CsvSchema schema_for(const Dataset& data, const std::string& outcome_name = "y",
                     const std::string& exposure_name = "w");

struct Standardization {
  Eigen::VectorXd values;
  double mean = 0.0;
  double sd = 1.0;

  double apply(double x) const { return (x - mean) / sd; }
};

/// Centers and scales to unit sample standard deviation (divisor N-1).
Standardization standardize(std::span<const double> values);
Standardization standardize(const Eigen::VectorXd& values);

/// The affine maps placing exposure and GPS values on a common scale.
struct StandardizedCoords {
  Eigen::VectorXd w_std;
  Eigen::VectorXd s_std;
  double w_mean = 0.0;
  double w_sd = 1.0;
  double s_mean = 0.0;
  double s_sd = 1.0;

  double map_w(double w) const { return (w - w_mean) / w_sd; }
  double map_s(double s) const { return (s - s_mean) / s_sd; }
};

StandardizedCoords standardize_coords(const Eigen::VectorXd& w,
                                      const Eigen::VectorXd& s);

}  // namespace cerfgp
