#include "ggpfr/model_io.hpp"

#include <sstream>
#include <vector>

#include "ggpfr/errors.hpp"

namespace ggpfr {

namespace {

void put_vector(std::ostream& os, const std::string& key, const Vector& v) {
  os << key << '=' << v.size();
  for (Index i = 0; i < v.size(); ++i) os << ' ' << format_real(v(i));
  os << '\n';
}

void put_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << format_real(m(i, j));
    os << '\n';
  }
}

void put_id(std::ostream& os, const std::string& key, const std::string& id) {
  if (id.empty() || id.find_first_of(" \t\r\n=") != std::string::npos)
    fail(ErrorClass::validation, "identifier '" + id + "' cannot be stored in a model file");
  os << key << '=' << id << '\n';
}

class Reader {
 public:
  explicit Reader(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) lines_.push_back(line);
    }
  }

  bool done() const { return pos_ >= lines_.size(); }

  const std::string& line() {
    if (done()) fail(ErrorClass::parse, "model file ends unexpectedly");
    return lines_[pos_++];
  }

  std::string value(const std::string& key) {
    const std::string& l = line();
    const auto eq = l.find('=');
    if (eq == std::string::npos || l.substr(0, eq) != key)
      fail(ErrorClass::parse, "expected key '" + key + "' at line " + std::to_string(pos_));
    return l.substr(eq + 1);
  }

  double real(const std::string& key) { return parse_real(value(key)); }

  long integer(const std::string& key) { return to_integer(value(key), key); }

  Vector vector(const std::string& key) {
    std::istringstream is(value(key));
    std::string tok;
    if (!(is >> tok)) fail(ErrorClass::parse, "missing length for '" + key + "'");
    const long n = to_integer(tok, key);
    Vector v(n);
    for (long i = 0; i < n; ++i) {
      if (!(is >> tok)) fail(ErrorClass::parse, "short vector '" + key + "'");
      v(i) = parse_real(tok);
    }
    if (is >> tok) fail(ErrorClass::parse, "trailing values in '" + key + "'");
    return v;
  }

  Matrix matrix(const std::string& name) {
    std::istringstream head(line());
    std::string word, got;
    std::string rows_tok, cols_tok;
    if (!(head >> word >> got >> rows_tok >> cols_tok) || word != "matrix" || got != name)
      fail(ErrorClass::parse, "expected matrix block '" + name + "'");
    const long rows = to_integer(rows_tok, name), cols = to_integer(cols_tok, name);
    Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i) {
      std::istringstream is(line());
      std::string tok;
      for (long j = 0; j < cols; ++j) {
        if (!(is >> tok)) fail(ErrorClass::parse, "malformed row in matrix block '" + name + "'");
        m(i, j) = parse_real(tok);
      }
      if (is >> tok) fail(ErrorClass::parse, "malformed row in matrix block '" + name + "'");
    }
    return m;
  }

 private:
  static long to_integer(const std::string& s, const std::string& key) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s, &used);
    } catch (...) {
      fail(ErrorClass::parse, "bad integer for '" + key + "'");
    }
    if (used != s.size() || v < 0) fail(ErrorClass::parse, "bad integer for '" + key + "'");
    return v;
  }

  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out = std::to_string(ids.size());
  for (const auto& id : ids) {
    if (id.find_first_of(" \t\r\n") != std::string::npos || id.empty())
      fail(ErrorClass::validation, "identifier '" + id + "' cannot be stored in a model file");
    out += ' ' + id;
  }
  return out;
}

}  // namespace

std::string format_model(const FittedModel& model) {
  std::ostringstream os;
  os << kModelFormatTag << ' ' << kModelFormatVersion << '\n';
  os << "family=" << to_string(model.family.kind) << '\n';
  os << "trials=" << model.family.trials << '\n';
  os << "dispersion=" << format_real(model.family.dispersion) << '\n';
  put_vector(os, "thresholds", model.family.thresholds);
  os << "kernel.kind=" << to_string(model.theta.kind) << '\n';
  os << "kernel.input_dim=" << model.theta.input_dim << '\n';
  put_vector(os, "kernel.log_params", model.theta.log_params);
  os << "objective=" << to_string(model.objective) << '\n';
  os << "jitter=" << format_real(model.jitter) << '\n';
  os << "clustered=" << (model.clustered ? 1 : 0) << '\n';
  os << "basis.degree=" << model.basis.degree << '\n';
  put_vector(os, "basis.knots", model.basis.knots);
  put_matrix(os, "B", model.B);
  put_vector(os, "gamma", model.gamma);
  put_vector(os, "x_center", model.x_center);
  put_vector(os, "x_scale", model.x_scale);
  os << "log_marginal=" << format_real(model.log_marginal) << '\n';
  os << "bic=" << format_real(model.bic) << '\n';
  os << "regret=" << format_real(model.regret) << '\n';
  os << "evaluations=" << model.evaluations << '\n';
  os << "penalty_count=" << model.penalty_count << '\n';
  os << "converged=" << (model.converged ? 1 : 0) << '\n';
  put_vector(os, "fit_trace", Eigen::Map<const Vector>(model.fit_trace.data(), static_cast<Index>(model.fit_trace.size())));
  os << "groups=" << model.groups.size() << '\n';
  if (model.per_batch.size() != model.groups.size()) fail(ErrorClass::consistency, "model posteriors do not match its groups");
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    const auto& grp = model.groups[g];
    const auto& post = model.per_batch[g];
    put_id(os, "group", grp.id);
    os << "members=" << join_ids(grp.member_ids) << '\n';
    Vector subject(static_cast<Index>(grp.subject.size()));
    for (std::size_t i = 0; i < grp.subject.size(); ++i) subject(static_cast<Index>(i)) = static_cast<double>(grp.subject[i]);
    put_vector(os, "subject", subject);
    put_vector(os, "times", grp.times);
    put_vector(os, "responses", grp.responses);
    put_matrix(os, "inputs", grp.inputs);
    put_matrix(os, "scalar_rows", grp.scalar_rows);
    put_matrix(os, "re_design", grp.re_design);
    put_vector(os, "mode", post.mode);
    put_vector(os, "alpha", post.alpha);
    put_vector(os, "neg_hessian_diag", post.neg_hessian_diag);
    os << "log_marginal_contribution=" << format_real(post.log_marginal_contribution) << '\n';
    os << "iterations=" << post.iterations << '\n';
    os << "gradient_norm=" << format_real(post.gradient_norm) << '\n';
  }
  os << "end\n";
  return os.str();
}

FittedModel parse_model(const std::string& text) {
  Reader in(text);
  {
    std::istringstream head(in.line());
    std::string tag, version;
    head >> tag >> version;
    if (tag != kModelFormatTag) fail(ErrorClass::parse, "not a model file");
    if (version != kModelFormatVersion)
      fail(ErrorClass::version, "model format " + version + " is not supported (expected " + kModelFormatVersion + ")");
  }
  FittedModel m;
  m.family.kind = family_kind_from_string(in.value("family"));
  m.family.trials = static_cast<int>(in.integer("trials"));
  m.family.dispersion = in.real("dispersion");
  m.family.thresholds = in.vector("thresholds");
  m.theta.kind = kernel_kind_from_string(in.value("kernel.kind"));
  m.theta.input_dim = in.integer("kernel.input_dim");
  m.theta.log_params = in.vector("kernel.log_params");
  m.objective = approximation_from_string(in.value("objective"));
  m.jitter = in.real("jitter");
  m.clustered = in.integer("clustered") != 0;
  m.basis.degree = static_cast<int>(in.integer("basis.degree"));
  m.basis.knots = in.vector("basis.knots");
  m.B = in.matrix("B");
  m.gamma = in.vector("gamma");
  m.x_center = in.vector("x_center");
  m.x_scale = in.vector("x_scale");
  m.log_marginal = in.real("log_marginal");
  m.bic = in.real("bic");
  m.regret = in.real("regret");
  m.evaluations = static_cast<int>(in.integer("evaluations"));
  m.penalty_count = static_cast<int>(in.integer("penalty_count"));
  m.converged = in.integer("converged") != 0;
  const Vector trace = in.vector("fit_trace");
  m.fit_trace.assign(trace.data(), trace.data() + trace.size());
  try {
    m.family.check();
    m.theta.check();
  } catch (const Error& e) {
    fail(ErrorClass::parse, std::string("invalid model header: ") + e.what());
  }
  if (m.B.rows() != m.basis.size()) fail(ErrorClass::parse, "B does not match the basis dimension");

  const long groups = in.integer("groups");
  for (long g = 0; g < groups; ++g) {
    LatentGroup grp;
    grp.id = in.value("group");
    {
      std::istringstream is(in.value("members"));
      std::size_t n = 0;
      if (!(is >> n)) fail(ErrorClass::parse, "bad member list");
      grp.member_ids.resize(n);
      for (auto& id : grp.member_ids)
        if (!(is >> id)) fail(ErrorClass::parse, "short member list");
    }
    const Vector subject = in.vector("subject");
    for (Index i = 0; i < subject.size(); ++i) grp.subject.push_back(static_cast<Index>(subject(i)));
    grp.times = in.vector("times");
    grp.responses = in.vector("responses");
    grp.inputs = in.matrix("inputs");
    grp.scalar_rows = in.matrix("scalar_rows");
    grp.re_design = in.matrix("re_design");
    LatentPosterior post;
    post.mode = in.vector("mode");
    post.alpha = in.vector("alpha");
    post.neg_hessian_diag = in.vector("neg_hessian_diag");
    post.log_marginal_contribution = in.real("log_marginal_contribution");
    post.iterations = static_cast<int>(in.integer("iterations"));
    post.gradient_norm = in.real("gradient_norm");
    const Index n = grp.times.size();
    if (grp.responses.size() != n || grp.inputs.rows() != n || grp.scalar_rows.rows() != n ||
        static_cast<Index>(grp.subject.size()) != n || post.mode.size() != n || post.alpha.size() != n ||
        post.neg_hessian_diag.size() != n || grp.inputs.cols() != m.theta.input_dim ||
        grp.scalar_rows.cols() != m.B.cols())
      fail(ErrorClass::parse, "inconsistent sizes in group '" + grp.id + "'");
    post.gram = factorize_with_jitter(group_covariance(grp, m.theta, m.gamma), m.jitter).matrix;
    refactor_posterior(post);
    m.groups.push_back(std::move(grp));
    m.per_batch.push_back(std::move(post));
  }
  if (in.line() != "end") fail(ErrorClass::parse, "missing end marker");
  return m;
}

void save_model(const FittedModel& model, const std::string& path) { write_text_file(path, format_model(model)); }

FittedModel load_model(const std::string& path) { return parse_model(read_text_file(path)); }

}  // namespace ggpfr
