#include "ggpfr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "ggpfr/errors.hpp"

namespace ggpfr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> columns_with_prefix(const std::vector<std::string>& header, char prefix) {
  std::vector<std::pair<int, std::string>> found;
  for (const auto& name : header) {
    if (name.size() < 2 || name[0] != prefix) continue;
    if (!std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    found.emplace_back(std::stoi(name.substr(1)), name);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> names;
  for (auto& [k, name] : found) names.push_back(name);
  return names;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorClass::schema, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

struct RawRow {
  double t;
  double z;
  std::vector<double> x, u, w;
  std::size_t line;
};

}  // namespace

FunctionalBatch FunctionalBatch::select(const std::vector<Index>& rows) const {
  FunctionalBatch out;
  out.batch_id = batch_id;
  out.cluster_id = cluster_id;
  out.scalar_covariates = scalar_covariates;
  const Index n = static_cast<Index>(rows.size());
  out.times.resize(n);
  out.responses.resize(n);
  out.covariates.resize(n, covariates.cols());
  out.re_covariates.resize(re_covariates.rows() > 0 ? n : 0, re_covariates.cols());
  for (Index i = 0; i < n; ++i) {
    const Index r = rows[static_cast<std::size_t>(i)];
    out.times(i) = times(r);
    out.responses(i) = responses(r);
    out.covariates.row(i) = covariates.row(r);
    if (re_covariates.rows() > 0) out.re_covariates.row(i) = re_covariates.row(r);
  }
  return out;
}

Index Dataset::num_covariates() const { return batches.empty() ? 0 : batches.front().covariates.cols(); }
Index Dataset::num_scalar_covariates() const {
  return batches.empty() ? 0 : batches.front().scalar_covariates.size();
}
Index Dataset::num_re_covariates() const { return batches.empty() ? 0 : batches.front().re_covariates.cols(); }
Index Dataset::num_observations() const {
  Index n = 0;
  for (const auto& b : batches) n += b.size();
  return n;
}

void validate_batch(const FunctionalBatch& batch, const ObservationFamily& family, bool allow_missing_response) {
  const Index n = batch.size();
  const std::string where = "batch '" + batch.batch_id + "'";
  if (batch.responses.size() != n || batch.covariates.rows() != n)
    fail(ErrorClass::consistency, where + ": row counts of times, responses and covariates differ");
  if (batch.re_covariates.size() > 0 && batch.re_covariates.rows() != n)
    fail(ErrorClass::consistency, where + ": random-effect design has the wrong row count");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(batch.times(i))) fail(ErrorClass::validation, where + ": non-finite time at row " + std::to_string(i));
    if (i > 0 && !(batch.times(i) > batch.times(i - 1)))
      fail(ErrorClass::validation, where + ": times not strictly increasing at row " + std::to_string(i));
    const double z = batch.responses(i);
    if (allow_missing_response && std::isnan(z)) continue;
    if (!family.in_support(z))
      fail(ErrorClass::validation, where + ", row " + std::to_string(i) + ": response " + format_real(z) +
                                       " invalid for " + to_string(family.kind));
  }
  if (!batch.covariates.allFinite() || !batch.scalar_covariates.allFinite() || !batch.re_covariates.allFinite())
    fail(ErrorClass::validation, where + ": non-finite covariate");
}

void validate_dataset(const Dataset& data, const ObservationFamily& family, bool allow_missing_response) {
  std::vector<std::string> ids;
  for (const auto& b : data.batches) {
    validate_batch(b, family, allow_missing_response);
    if (b.covariates.cols() != data.num_covariates() || b.scalar_covariates.size() != data.num_scalar_covariates() ||
        b.re_covariates.cols() != data.num_re_covariates())
      fail(ErrorClass::consistency, "batch '" + b.batch_id + "': covariate dimensions differ from other batches");
    ids.push_back(b.batch_id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    fail(ErrorClass::consistency, "duplicate batch ids");
}

double parse_real(const std::string& token) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || token.empty())
    fail(ErrorClass::parse, "malformed number '" + token + "'");
  if (!std::isfinite(value)) fail(ErrorClass::parse, "non-finite number '" + token + "'");
  return value;
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorClass::schema, "empty CSV input");
  const auto header = split_line(line);

  const auto x_cols = schema.covariate_columns.empty() ? columns_with_prefix(header, 'x') : schema.covariate_columns;
  const auto u_cols = schema.scalar_columns.empty() ? columns_with_prefix(header, 'u') : schema.scalar_columns;
  const auto w_cols = schema.re_columns.empty() ? columns_with_prefix(header, 'w') : schema.re_columns;
  if (x_cols.empty()) fail(ErrorClass::schema, "no functional covariate columns (x1..xQ)");
  if (u_cols.empty()) fail(ErrorClass::schema, "no scalar covariate columns (u1..up)");

  const auto i_batch = column_index(header, schema.batch_column);
  const auto i_time = column_index(header, schema.time_column);
  const auto i_resp = column_index(header, schema.response_column);
  std::ptrdiff_t i_cluster = -1;
  if (schema.require_cluster) i_cluster = static_cast<std::ptrdiff_t>(column_index(header, schema.cluster_column));
  std::vector<std::size_t> ix, iu, iw;
  for (const auto& c : x_cols) ix.push_back(column_index(header, c));
  for (const auto& c : u_cols) iu.push_back(column_index(header, c));
  for (const auto& c : w_cols) iw.push_back(column_index(header, c));

  std::map<std::string, std::vector<RawRow>> groups;
  std::map<std::string, std::string> cluster_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      fail(ErrorClass::parse, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(cells.size()));
    RawRow row;
    row.line = line_no;
    row.t = parse_real(cells[i_time]);
    const auto& zc = cells[i_resp];
    if (schema.allow_missing_response && (zc.empty() || zc == "NA"))
      row.z = std::numeric_limits<double>::quiet_NaN();
    else
      row.z = parse_real(zc);
    for (auto k : ix) row.x.push_back(parse_real(cells[k]));
    for (auto k : iu) row.u.push_back(parse_real(cells[k]));
    for (auto k : iw) row.w.push_back(parse_real(cells[k]));
    const std::string& id = cells[i_batch];
    if (id.empty()) fail(ErrorClass::parse, "line " + std::to_string(line_no) + ": empty batch id");
    if (i_cluster >= 0) {
      const std::string& cid = cells[static_cast<std::size_t>(i_cluster)];
      auto [it, inserted] = cluster_of.emplace(id, cid);
      if (!inserted && it->second != cid)
        fail(ErrorClass::consistency, "batch '" + id + "' assigned to more than one cluster");
    }
    groups[id].push_back(std::move(row));
  }

  Dataset data;
  data.family_tag = schema.family.kind;
  data.covariate_names = x_cols;
  for (auto& [id, rows] : groups) {
    std::stable_sort(rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].u != rows[0].u)
        fail(ErrorClass::consistency, "batch '" + id + "': scalar covariates not constant (line " +
                                          std::to_string(rows[i].line) + ")");
    FunctionalBatch b;
    b.batch_id = id;
    if (i_cluster >= 0) b.cluster_id = cluster_of[id];
    const Index n = static_cast<Index>(rows.size());
    b.times.resize(n);
    b.responses.resize(n);
    b.covariates.resize(n, static_cast<Index>(ix.size()));
    b.re_covariates.resize(iw.empty() ? 0 : n, static_cast<Index>(iw.size()));
    b.scalar_covariates = Eigen::Map<const Vector>(rows[0].u.data(), static_cast<Index>(rows[0].u.size()));
    for (Index i = 0; i < n; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      b.times(i) = r.t;
      b.responses(i) = r.z;
      for (std::size_t q = 0; q < ix.size(); ++q) b.covariates(i, static_cast<Index>(q)) = r.x[q];
      for (std::size_t q = 0; q < iw.size(); ++q) b.re_covariates(i, static_cast<Index>(q)) = r.w[q];
    }
    data.batches.push_back(std::move(b));
  }
  if (data.batches.empty()) fail(ErrorClass::schema, "CSV contains no data rows");
  validate_dataset(data, schema.family, schema.allow_missing_response);
  return data;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorClass::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorClass::io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorClass::io, "write failed for '" + path + "'");
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) { return parse_csv(read_text_file(path), schema); }

std::string format_csv(const Dataset& data) {
  std::ostringstream out;
  const bool clustered = std::any_of(data.batches.begin(), data.batches.end(),
                                     [](const FunctionalBatch& b) { return !b.cluster_id.empty(); });
  const Index q = data.num_covariates(), p = data.num_scalar_covariates(), r = data.num_re_covariates();
  out << "batch_id";
  if (clustered) out << ",cluster_id";
  out << ",t,z";
  for (Index k = 1; k <= q; ++k) out << ",x" << k;
  for (Index k = 1; k <= p; ++k) out << ",u" << k;
  for (Index k = 1; k <= r; ++k) out << ",w" << k;
  out << '\n';
  for (const auto& b : data.batches) {
    for (Index i = 0; i < b.size(); ++i) {
      out << b.batch_id;
      if (clustered) out << ',' << b.cluster_id;
      out << ',' << format_real(b.times(i)) << ',';
      if (std::isnan(b.responses(i)))
        out << "NA";
      else
        out << format_real(b.responses(i));
      for (Index k = 0; k < q; ++k) out << ',' << format_real(b.covariates(i, k));
      for (Index k = 0; k < p; ++k) out << ',' << format_real(b.scalar_covariates(k));
      for (Index k = 0; k < r; ++k) out << ',' << format_real(b.re_covariates(i, k));
      out << '\n';
    }
  }
  return out.str();
}

void save_csv(const Dataset& data, const std::string& path) { write_text_file(path, format_csv(data)); }

}  // namespace ggpfr
