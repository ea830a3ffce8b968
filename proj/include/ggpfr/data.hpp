#pragma once

#include <string>
#include <vector>

#include "ggpfr/family.hpp"
#include "ggpfr/types.hpp"

namespace ggpfr {

// One subject's curve: observations z at times t with concurrent functional
// covariates x(t) (rows of `covariates`) and subject-level covariates u.
struct FunctionalBatch {
  std::string batch_id;
  std::string cluster_id;  // empty unless the data are clustered
  Vector times;
  Vector responses;
  Matrix covariates;         // N x Q
  Vector scalar_covariates;  // p
  Matrix re_covariates;      // N x r random-effect design, empty if absent

  Index size() const { return times.size(); }
  // Row subset in the given order.
  FunctionalBatch select(const std::vector<Index>& rows) const;
};

struct Dataset {
  std::vector<FunctionalBatch> batches;
  FamilyKind family_tag = FamilyKind::bernoulli_logit;
  std::vector<std::string> covariate_names;

  Index num_covariates() const;         // Q
  Index num_scalar_covariates() const;  // p
  Index num_re_covariates() const;      // r (0 when absent)
  Index num_observations() const;
};

// Checks the container invariants; responses are checked against `family`
// unless allow_missing_response is set, in which case NaN responses mark
// query rows.
void validate_batch(const FunctionalBatch& batch, const ObservationFamily& family,
                    bool allow_missing_response = false);
void validate_dataset(const Dataset& data, const ObservationFamily& family,
                      bool allow_missing_response = false);

// Long-format CSV layout. Empty column lists are filled from the header by
// prefix (x1.., u1.., w1..).
struct CsvSchema {
  std::string batch_column = "batch_id";
  std::string time_column = "t";
  std::string response_column = "z";
  std::string cluster_column = "cluster_id";
  std::vector<std::string> covariate_columns;
  std::vector<std::string> scalar_columns;
  std::vector<std::string> re_columns;
  ObservationFamily family;
  bool require_cluster = false;
  // Accept "NA" or empty responses (stored as NaN) for prediction inputs.
  bool allow_missing_response = false;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema);
std::string format_csv(const Dataset& data);
void save_csv(const Dataset& data, const std::string& path);

// Strict decimal parse; NaN and infinities are rejected.
double parse_real(const std::string& token);
std::string format_real(double value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ggpfr
