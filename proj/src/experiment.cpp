#include "sqla/experiment.hpp"

#include "sqla/apps.hpp"
#include "sqla/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace sqla::experiment {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::uint64_t kInstanceStream = 0;
const std::uint64_t kSideStream = 0x5eedULL;
const std::uint64_t kCalibrationStream = 1000;

Mat haar_like(Rng& rng, Eigen::Index n, Eigen::Index k, bool complex_entries) {
  std::normal_distribution<double> g;
  Mat x(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = cplx(g(rng), complex_entries ? g(rng) : 0.0);
  Eigen::HouseholderQR<Mat> qr(x);
  return qr.householderQ() * Mat::Identity(n, k);
}

double parse_number(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error&) {
    fail(ErrorKind::Validation, "config: " + key + " must be numeric, got '" + v + "'");
  }
}

index_t parse_count(const std::string& key, const std::string& v) {
  const double x = parse_number(key, v);
  if (x < 0.0 || x != std::floor(x)) fail(ErrorKind::Validation, "config: " + key + " must be a non-negative integer");
  return static_cast<index_t>(x);
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "1" || v == "on" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "off" || v == "false" || v == "no") return false;
  fail(ErrorKind::Validation, "config: " + key + " must be on or off, got '" + v + "'");
}

std::string fmt(double x) { return io::format_double(x); }

// ---------------------------------------------------------------------------
// instances and references

struct Instance {
  Mat a;
  Vec b;
  index_t row = 0;
  double spectral = 0.0;
};

Instance make_instance(const ExperimentConfig& c, const Mat* given = nullptr) {
  Instance in;
  in.a = given ? *given : instance_matrix(c);
  if (c.matrix_file.empty() && c.synthetic.noise == 0.0) in.spectral = c.synthetic.sigma_max;
  if (c.params.count("spectral_norm")) in.spectral = c.param("spectral_norm", 0.0);
  Rng side(child_seed(c.seed, kSideStream));
  const Eigen::Index n = in.a.cols();
  if (c.pipeline == "regression") {
    std::normal_distribution<double> g;
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = g(side);
    in.b = in.a * z;
    require(in.b.norm() > 0.0, ErrorKind::Degenerate, "regression: b = A z vanished");
    in.b.normalize();
  } else if (c.pipeline == "hamiltonian") {
    std::normal_distribution<double> g;
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = cplx(g(side), c.synthetic.complex_entries ? g(side) : 0.0);
    in.b = z.normalized();
  } else if (c.pipeline == "recommend") {
    in.row = static_cast<index_t>(c.param("row", 0.0));
    require(in.row < static_cast<index_t>(in.a.rows()), "recommend: row out of range");
  }
  return in;
}

ScalarFunction make_function(const ExperimentConfig& c, double spectral) {
  const std::string def = c.pipeline == "eigen_transform" ? "exp_neg" : "step";
  const std::string name = c.option("function", def);
  if (name == "step") return fn::step(c.param("sigma", 0.9), c.param("eta", 1.0 / 6.0));
  if (name == "identity") return fn::identity();
  if (name == "cos_sqrt") return fn::cos_sqrt();
  if (name == "exp_neg") {
    require(spectral > 0.0, "exp_neg needs spectral_norm in the config or a noiseless synthetic matrix");
    return fn::exp_neg(c.param("scale", 1.0), spectral);
  }
  fail(ErrorKind::Validation, "unknown function '" + name + "'");
}

struct Reference {
  Mat op;
  RVec sv;
  Vec x;
  RVec dist;
  double frob2 = 0.0;
};

Reference make_reference(const ExperimentConfig& c, const Instance& in) {
  Reference ref;
  const std::string& p = c.pipeline;
  if (p == "even_svt") {
    const ScalarFunction f = make_function(c, in.spectral);
    ref.op = oracle::dense_even_svt(in.a, f.f);
  } else if (p == "eigen_transform") {
    const ScalarFunction f = make_function(c, in.spectral);
    ref.op = oracle::dense_eigen_transform(in.a, f.f);
  } else if (p == "singular_values") {
    ref.sv = Eigen::BDCSVD<Mat>(in.a).singularValues();
    ref.frob2 = in.a.squaredNorm();
  } else if (p == "regression") {
    ref.x = oracle::dense_thresholded(in.a, c.param("sigma", 0.8), c.param("eta", 0.5),
                                      oracle::ThresholdKind::PseudoInverse) *
            in.b;
  } else if (p == "hamiltonian") {
    ref.x = oracle::expm_apply(in.a, in.b, cplx(0.0, 1.0));
  } else if (p == "recommend") {
    const Mat ah =
        oracle::dense_thresholded(in.a, c.param("sigma", 0.9), c.param("eta", 1.0 / 6.0), oracle::ThresholdKind::LowRank);
    const RVec w = ah.row(static_cast<Eigen::Index>(in.row)).cwiseAbs2().transpose();
    ref.dist = w.sum() > 0.0 ? RVec(w / w.sum()) : w;
  }
  return ref;
}

// what a trial leaves behind for the oracle comparison
struct Output {
  std::optional<RurDecomposition> rur;
  std::optional<EigenDecompApprox> eig;
  RVec sv;
  Vec x;
  RVec dist;
  bool empty = false;
};

double measure(const ExperimentConfig& c, const Reference& ref, const Output& o) {
  const std::string& p = c.pipeline;
  if (p == "even_svt") return (o.rur->dense_operator() - ref.op).operatorNorm();
  if (p == "eigen_transform") return (o.eig->dense_operator() - ref.op).operatorNorm();
  if (p == "singular_values") {
    double s = 0.0;
    for (Eigen::Index i = 0; i < std::max(o.sv.size(), ref.sv.size()); ++i) {
      const double a = i < o.sv.size() ? o.sv[i] : 0.0;
      const double b = i < ref.sv.size() ? ref.sv[i] : 0.0;
      s += (a * a - b * b) * (a * a - b * b);
    }
    return std::sqrt(s) / ref.frob2;
  }
  if (p == "regression") {
    const double xn = ref.x.norm();
    const Vec x = o.empty ? Vec::Zero(ref.x.size()) : o.x;
    return xn > 0.0 ? (x - ref.x).norm() / xn : x.norm();
  }
  if (p == "hamiltonian") return (o.x - ref.x).norm();
  if (p == "recommend") {
    if (o.empty) return ref.dist.sum() > 0.0 ? 1.0 : 0.0;
    return oracle::tv_distance(o.dist, ref.dist);
  }
  fail(ErrorKind::Validation, "unknown pipeline " + p);
}

SvtOptions svt_options(const ExperimentConfig& c, double spectral) {
  SvtOptions o;
  o.eps = c.eps();
  o.delta = c.delta();
  o.r = static_cast<index_t>(c.param("r", 0.0));
  o.c = static_cast<index_t>(c.param("c", 0.0));
  o.r_constant = c.constant("r");
  o.c_constant = c.constant("c");
  o.max_size = static_cast<index_t>(c.param("max_size", 16384.0));
  o.spectral_norm = spectral;
  o.check_radius = c.param("check_radius", 1.0) != 0.0;
  return o;
}

double log_inv(double delta) { return std::max(std::log(1.0 / delta), 1.0); }

struct TrialRun {
  TrialResult result;
  Output output;
};

TrialRun run_trial(const ExperimentConfig& c, const Instance& in, index_t trial) {
  TrialRun tr;
  TrialResult& res = tr.result;
  Output& out = tr.output;
  res.trial = trial;
  res.seed = child_seed(c.seed, trial + 1);
  res.bound = c.eps();
  Rng rng(res.seed);
  const std::string& p = c.pipeline;
  const double eps = c.eps(), delta = c.delta();

  auto t0 = Clock::now();
  auto sq = std::make_shared<const SqMatrix>(in.a);
  const OversampledMatrix a = OversampledMatrix::exact(sq);
  std::optional<OversampledVector> b;
  if (in.b.size()) b = OversampledVector::exact(in.b);
  res.build_seconds = seconds_since(t0);

  t0 = Clock::now();
  if (p == "even_svt") {
    const ScalarFunction f = make_function(c, in.spectral);
    out.rur = even_svt(a, f, svt_options(c, in.spectral), rng);
    res.r = out.rur->r();
    res.c = out.rur->c();
  } else if (p == "eigen_transform") {
    const ScalarFunction f = make_function(c, in.spectral);
    EigenOptions eo;
    eo.svt = svt_options(c, in.spectral);
    eo.spectral_norm = in.spectral;
    eo.L = f.L > 0.0 ? f.L : 1.0;
    eo.pool_per_mean = static_cast<index_t>(c.param("pool_per_mean", 0.0));
    eo.pool_groups = static_cast<index_t>(c.param("pool_groups", 0.0));
    eo.pool_constant = c.constant("pool");
    out.eig = eigen_transform(a, f, eps, delta, eo, rng);
    res.r = out.eig->S.size();
    res.c = out.eig->projector.c();
  } else if (p == "singular_values") {
    const double auto_size = std::ceil(c.constant("sv") * log_inv(delta) / (eps * eps));
    res.r = static_cast<index_t>(c.param("r", auto_size));
    res.c = static_cast<index_t>(c.param("c", auto_size));
    out.sv = estimate_singular_values(a, res.r, res.c, rng);
  } else if (p == "regression") {
    apps::RegressionOptions ro;
    ro.svt = svt_options(c, in.spectral);
    ro.spectral_norm = in.spectral;
    ro.pool_per_mean = static_cast<index_t>(c.param("pool_per_mean", 0.0));
    ro.pool_groups = static_cast<index_t>(c.param("pool_groups", 0.0));
    ro.pool_constant = c.constant("pool");
    const auto rr = apps::solve_regularized(a, *b, {c.param("sigma", 0.8), c.param("eta", 0.5)}, eps, delta, ro, rng);
    res.r = rr.rur.r();
    res.c = rr.rur.c();
    out.empty = rr.empty || !rr.x;
    if (!out.empty) out.x = rr.x->dense();
  } else if (p == "hamiltonian") {
    apps::HamiltonianOptions ho;
    const std::string mode = c.option("mode", "general");
    require(mode == "general" || mode == "lowrank", "hamiltonian: mode must be general or lowrank");
    ho.mode = mode == "general" ? apps::HamiltonianMode::General : apps::HamiltonianMode::LowRank;
    ho.sigma = c.param("sigma", c.synthetic.sigma_min);
    ho.cos_svt = svt_options(c, in.spectral);
    ho.sinc_svt = ho.cos_svt;
    ho.spectral_norm = in.spectral;
    ho.w_samples = static_cast<index_t>(c.param("w_samples", 0.0));
    ho.h_samples = static_cast<index_t>(c.param("h_samples", 0.0));
    ho.sample_constant = c.constant("sample");
    const auto hr = apps::hamiltonian_evolve(a, *b, eps, delta, ho, rng);
    res.r = hr.cos_rur.r();
    res.c = hr.cos_rur.c();
    out.x = hr.b_hat.dense();
  } else if (p == "recommend") {
    apps::RecommendOptions ro;
    ro.svt = svt_options(c, in.spectral);
    ro.row_samples = static_cast<index_t>(c.param("row_samples", 0.0));
    ro.row_constant = c.constant("row");
    const auto rr =
        apps::recommend(sq, in.row, {c.param("sigma", 0.9), c.param("eta", 1.0 / 6.0)}, eps, delta, ro, rng);
    res.r = rr.rur.r();
    res.c = rr.rur.c();
    out.empty = rr.empty || !rr.row;
    if (!out.empty) out.dist = oracle::exact_output_distribution(*rr.row);
  } else {
    fail(ErrorKind::Validation, "unknown pipeline " + p);
  }
  res.core_seconds = seconds_since(t0);
  return tr;
}

bool oracle_applies(const ExperimentConfig& c, const Mat& a) {
  return c.oracle && static_cast<index_t>(std::max(a.rows(), a.cols())) <= c.oracle_limit;
}

fs::path trial_dir(const fs::path& out, index_t trial) { return out / "decomp" / ("trial_" + std::to_string(trial)); }

void save_output(const ExperimentConfig& c, const fs::path& dir, const TrialRun& tr) {
  const io::Manifest extra{{"trial", std::to_string(tr.result.trial)}, {"pipeline", c.pipeline}};
  const Output& o = tr.output;
  if (o.rur) {
    io::save_rur(dir, *o.rur, extra);
    return;
  }
  if (o.eig) {
    io::save_eigen(dir, *o.eig, extra);
    return;
  }
  fs::create_directories(dir);
  io::Manifest m = extra;
  m["kind"] = "output";
  m["empty"] = o.empty ? "1" : "0";
  io::write_manifest(dir / "manifest.txt", m);
  if (o.sv.size()) io::write_vector_text(dir / "output.txt", o.sv.cast<cplx>());
  if (o.x.size()) io::write_vector_text(dir / "output.txt", o.x);
  if (o.dist.size()) io::write_vector_text(dir / "output.txt", o.dist.cast<cplx>());
}

Output load_output(const ExperimentConfig& c, const fs::path& dir, const Instance& in) {
  Output o;
  const io::Manifest m = io::read_manifest(dir / "manifest.txt");
  const std::string kind = m.count("kind") ? m.at("kind") : "";
  if (kind == "rur") {
    o.rur = io::load_rur(dir, OversampledMatrix::exact(in.a));
  } else if (kind == "eigen") {
    o.eig = io::load_eigen(dir, OversampledMatrix::exact(in.a));
  } else if (kind == "output") {
    o.empty = m.count("empty") && m.at("empty") == "1";
    if (fs::exists(dir / "output.txt")) {
      const Vec v = io::read_vector(dir / "output.txt");
      if (c.pipeline == "singular_values") o.sv = v.real();
      else if (c.pipeline == "recommend") o.dist = v.real();
      else o.x = v;
    }
  } else {
    fail(ErrorKind::Io, dir.string() + ": unknown output kind");
  }
  return o;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write " + p.string());
  return os;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

GeneratedMatrix gen_matrix(const SyntheticSpec& s, Rng& rng) {
  require(s.m >= 1 && s.n >= 1, "gen_matrix: dimensions must be positive");
  require(s.rank >= 1 && s.rank <= std::min(s.m, s.n), "gen_matrix: rank must lie in [1, min(m, n)]");
  require(s.sigma_min > 0.0 && s.sigma_max >= s.sigma_min, "gen_matrix: need 0 < sigma_min <= sigma_max");
  require(s.noise >= 0.0, "gen_matrix: noise must be non-negative");
  require(!s.hermitian || s.m == s.n, "gen_matrix: Hermitian matrices are square");
  const auto k = static_cast<Eigen::Index>(s.rank);
  GeneratedMatrix g;
  g.spectrum.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double t = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    g.spectrum[i] = s.sigma_max + t * (s.sigma_min - s.sigma_max);
    if (s.hermitian && s.indefinite && i % 2 == 1) g.spectrum[i] = -g.spectrum[i];
  }
  const auto m = static_cast<Eigen::Index>(s.m), n = static_cast<Eigen::Index>(s.n);
  if (s.hermitian) {
    const Mat v = haar_like(rng, n, k, s.complex_entries);
    g.clean = v * g.spectrum.cast<cplx>().asDiagonal() * v.adjoint();
    g.clean = 0.5 * (g.clean + g.clean.adjoint()).eval();
  } else {
    const Mat u = haar_like(rng, m, k, s.complex_entries);
    const Mat v = haar_like(rng, n, k, s.complex_entries);
    g.clean = u * g.spectrum.cast<cplx>().asDiagonal() * v.adjoint();
  }
  g.a = g.clean;
  if (s.noise > 0.0) {
    std::normal_distribution<double> nd;
    Mat e(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i) e(i, j) = cplx(nd(rng), s.complex_entries ? nd(rng) : 0.0);
    if (s.hermitian) e = 0.5 * (e + e.adjoint()).eval();
    g.a += e * (s.noise * g.clean.norm() / e.norm());
  }
  return g;
}

double ExperimentConfig::param(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string ExperimentConfig::option(const std::string& key, const std::string& fallback) const {
  auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

double ExperimentConfig::constant(const std::string& key) const {
  auto it = constants.find(key);
  return it == constants.end() ? 1.0 : it->second;
}

ExperimentConfig config_from_manifest(const io::Manifest& m) {
  ExperimentConfig c;
  for (const auto& [k, v] : m) {
    if (k == "pipeline") c.pipeline = v;
    else if (k == "matrix") c.matrix_file = v;
    else if (k == "m") c.synthetic.m = parse_count(k, v);
    else if (k == "n") c.synthetic.n = parse_count(k, v);
    else if (k == "rank") c.synthetic.rank = parse_count(k, v);
    else if (k == "sigma_min") c.synthetic.sigma_min = parse_number(k, v);
    else if (k == "sigma_max") c.synthetic.sigma_max = parse_number(k, v);
    else if (k == "noise") c.synthetic.noise = parse_number(k, v);
    else if (k == "hermitian") c.synthetic.hermitian = parse_flag(k, v);
    else if (k == "indefinite") c.synthetic.indefinite = parse_flag(k, v);
    else if (k == "complex") c.synthetic.complex_entries = parse_flag(k, v);
    else if (k == "trials") c.trials = parse_count(k, v);
    else if (k == "seed") c.seed = std::stoull(v);
    else if (k == "jobs") c.jobs = parse_count(k, v);
    else if (k == "oracle") c.oracle = parse_flag(k, v);
    else if (k == "oracle_limit") c.oracle_limit = parse_count(k, v);
    else if (k == "save") c.save = parse_flag(k, v);
    else if (k == "out") c.out = v;
    else if (k == "function" || k == "mode") c.options[k] = v;
    else if (k.rfind("constant.", 0) == 0) c.constants[k.substr(9)] = parse_number(k, v);
    else c.params[k] = parse_number(k, v);
  }
  return c;
}

io::Manifest config_to_manifest(const ExperimentConfig& c) {
  io::Manifest m;
  m["pipeline"] = c.pipeline;
  if (!c.matrix_file.empty()) m["matrix"] = c.matrix_file;
  m["m"] = std::to_string(c.synthetic.m);
  m["n"] = std::to_string(c.synthetic.n);
  m["rank"] = std::to_string(c.synthetic.rank);
  m["sigma_min"] = fmt(c.synthetic.sigma_min);
  m["sigma_max"] = fmt(c.synthetic.sigma_max);
  m["noise"] = fmt(c.synthetic.noise);
  m["hermitian"] = c.synthetic.hermitian ? "on" : "off";
  m["indefinite"] = c.synthetic.indefinite ? "on" : "off";
  m["complex"] = c.synthetic.complex_entries ? "on" : "off";
  m["trials"] = std::to_string(c.trials);
  m["seed"] = std::to_string(c.seed);
  m["jobs"] = std::to_string(c.jobs);
  m["oracle"] = c.oracle ? "on" : "off";
  m["oracle_limit"] = std::to_string(c.oracle_limit);
  m["save"] = c.save ? "on" : "off";
  if (!c.out.empty()) m["out"] = c.out;
  for (const auto& [k, v] : c.options) m[k] = v;
  for (const auto& [k, v] : c.params) m[k] = fmt(v);
  for (const auto& [k, v] : c.constants) m["constant." + k] = fmt(v);
  return m;
}

ExperimentConfig load_config(const fs::path& p) { return config_from_manifest(io::read_manifest(p)); }

const std::vector<std::string>& pipelines() {
  static const std::vector<std::string> names{"even_svt",   "eigen_transform", "singular_values",
                                              "regression", "hamiltonian",     "recommend"};
  return names;
}

std::vector<std::string> size_constants(const std::string& p) {
  if (p == "even_svt") return {"c", "r"};
  if (p == "eigen_transform" || p == "regression") return {"c", "pool", "r"};
  if (p == "singular_values") return {"sv"};
  if (p == "hamiltonian") return {"c", "r", "sample"};
  if (p == "recommend") return {"c", "r", "row"};
  return {};
}

void validate(const ExperimentConfig& c) {
  const auto& ps = pipelines();
  require(std::find(ps.begin(), ps.end(), c.pipeline) != ps.end(), "config: unknown pipeline '" + c.pipeline + "'");
  require(c.trials >= 1, "config: trials must be at least 1");
  require(c.jobs >= 1, "config: jobs must be at least 1");
  const double e = c.eps(), d = c.delta();
  require(e > 0.0 && e <= 1.0, "config: eps must lie in (0,1]");
  require(d > 0.0 && d <= 1.0, "config: delta must lie in (0,1]");
  for (const auto& [k, v] : c.constants) require(v > 0.0, "config: constant." + k + " must be positive");
  if (c.matrix_file.empty()) {
    const SyntheticSpec& s = c.synthetic;
    require(s.m >= 1 && s.n >= 1 && s.rank >= 1 && s.rank <= std::min(s.m, s.n),
            "config: synthetic matrix needs 1 <= rank <= min(m, n)");
    require(s.sigma_min > 0.0 && s.sigma_max >= s.sigma_min, "config: need 0 < sigma_min <= sigma_max");
    require(s.noise >= 0.0, "config: noise must be non-negative");
    if (c.pipeline == "eigen_transform" || c.pipeline == "hamiltonian")
      require(s.hermitian, "config: " + c.pipeline + " needs hermitian = on");
    if (s.hermitian) require(s.m == s.n, "config: Hermitian matrices are square");
  }
}

std::string trial_row(const ExperimentConfig& c, index_t rows, index_t cols, const TrialResult& t) {
  std::ostringstream os;
  os << t.trial << "," << t.seed << "," << c.pipeline << "," << rows << "," << cols << "," << t.r << "," << t.c << ","
     << (t.checked ? fmt(t.error) : "") << "," << fmt(t.bound) << "," << (t.checked ? 1 : 0) << ","
     << (t.checked ? (t.pass ? "1" : "0") : "");
  return os.str();
}

Mat instance_matrix(const ExperimentConfig& c) {
  if (!c.matrix_file.empty()) return io::read_matrix(c.matrix_file);
  Rng rng(child_seed(c.seed, kInstanceStream));
  return gen_matrix(c.synthetic, rng).a;
}

RunSummary run_experiment(const ExperimentConfig& c) {
  validate(c);
  const Instance in = make_instance(c);
  const bool check = oracle_applies(c, in.a);
  Reference ref;
  double ref_seconds = 0.0;
  if (check) {
    const auto t0 = Clock::now();
    ref = make_reference(c, in);
    ref_seconds = seconds_since(t0);
  }

  const fs::path out = c.out;
  if (!c.out.empty()) {
    fs::create_directories(out);
    io::write_manifest(out / "config.txt", config_to_manifest(c));
    if (c.save) io::write_matrix(out / "matrix.bin", in.a);
  }

  RunSummary sum;
  sum.trials.resize(c.trials);
  std::vector<std::exception_ptr> errors(c.trials);
  std::atomic<index_t> next{0};
  auto worker = [&] {
    for (index_t t = next++; t < c.trials; t = next++) {
      try {
        TrialRun tr = run_trial(c, in, t);
        if (check) {
          const auto t0 = Clock::now();
          tr.result.error = measure(c, ref, tr.output);
          tr.result.oracle_seconds = seconds_since(t0);
          tr.result.checked = true;
          tr.result.pass = tr.result.error <= tr.result.bound;
        }
        if (!c.out.empty() && c.save) save_output(c, trial_dir(out, t), tr);
        sum.trials[t] = tr.result;
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const index_t workers = std::min(c.jobs, c.trials);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (index_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (const auto& t : sum.trials) {
    sum.checked += t.checked;
    sum.passes += t.pass;
  }
  if (sum.checked) {
    const double d = c.delta();
    const double k = static_cast<double>(sum.checked);
    sum.pass_rate = static_cast<double>(sum.passes) / k;
    sum.required_rate = c.params.count("min_pass_rate") ? c.param("min_pass_rate", 0.0)
                                                         : std::max(0.0, 1.0 - d - 3.0 * std::sqrt(d * (1.0 - d) / k));
    sum.ok = sum.pass_rate >= sum.required_rate;
  }

  if (!c.out.empty()) {
    const index_t rows = in.a.rows(), cols = in.a.cols();
    {
      auto os = open_out(out / "trials.csv");
      os << kTrialHeader << "\n";
      for (const auto& t : sum.trials) os << trial_row(c, rows, cols, t) << "\n";
    }
    {
      auto os = open_out(out / "timings.csv");
      os << kTimingHeader << "\n";
      for (const auto& t : sum.trials)
        os << t.trial << "," << fmt(t.build_seconds) << "," << fmt(t.core_seconds) << "," << fmt(t.oracle_seconds)
           << "\n";
    }
    io::Manifest m;
    m["pipeline"] = c.pipeline;
    m["trials"] = std::to_string(c.trials);
    m["checked"] = std::to_string(sum.checked);
    m["passes"] = std::to_string(sum.passes);
    m["pass_rate"] = fmt(sum.pass_rate);
    m["required_rate"] = fmt(sum.required_rate);
    m["ok"] = sum.ok ? "1" : "0";
    m["reference_seconds"] = fmt(ref_seconds);
    for (const auto& k : size_constants(c.pipeline)) m["constant." + k] = fmt(c.constant(k));
    io::write_manifest(out / "summary.txt", m);
  }
  return sum;
}

double reverify(const fs::path& out, index_t trial) {
  ExperimentConfig c = load_config(out / "config.txt");
  const Mat a = io::read_matrix(out / "matrix.bin");
  const Instance in = make_instance(c, &a);
  const Reference ref = make_reference(c, in);
  const Output o = load_output(c, trial_dir(out, trial), in);
  return measure(c, ref, o);
}

CalibrationResult calibrate(const ExperimentConfig& base, double target, index_t instances, index_t max_doublings) {
  validate(base);
  require(target > 0.0 && target <= 1.0, "calibrate: target pass rate must lie in (0,1]");
  require(instances >= 1, "calibrate: need at least one instance");
  const auto names = size_constants(base.pipeline);
  for (const char* k : {"r", "c"})
    require(base.params.count(k) == 0, std::string("calibrate: explicit ") + k + " leaves nothing to calibrate");
  CalibrationResult res;
  for (const auto& k : names) res.constants[k] = base.constant(k);
  for (index_t round = 0;; ++round) {
    index_t passes = 0, checked = 0;
    for (index_t i = 0; i < instances; ++i) {
      ExperimentConfig c = base;
      c.seed = child_seed(base.seed, kCalibrationStream + i);
      c.out.clear();
      c.oracle = true;
      for (const auto& [k, v] : res.constants) c.constants[k] = v;
      const RunSummary s = run_experiment(c);
      require(s.checked > 0, "calibrate: instance too large for the oracle limit");
      passes += s.passes;
      checked += s.checked;
    }
    res.pass_rate = static_cast<double>(passes) / static_cast<double>(checked);
    res.doublings = round;
    if (res.pass_rate >= target) {
      res.converged = true;
      return res;
    }
    if (round == max_doublings) return res;
    for (auto& [k, v] : res.constants) v *= 2.0;
  }
}

// ---------------------------------------------------------------------------

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::vector<RunStats> aggregate(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "trials.csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::Io, "no trials.csv under " + dir.string());

  std::vector<RunStats> out;
  std::vector<double> all_err, all_bound, all_core;
  RunStats all;
  all.path = "all";
  for (const auto& f : files) {
    std::ifstream is(f);
    if (!is) fail(ErrorKind::Io, "cannot open " + f.string());
    std::string line;
    if (!std::getline(is, line) || line != kTrialHeader) fail(ErrorKind::Io, f.string() + ": unexpected header");
    RunStats s;
    s.path = f.parent_path().string();
    std::vector<double> err, bound, core;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto cells = split_csv(line);
      if (cells.size() != 11) fail(ErrorKind::Io, f.string() + ": malformed row '" + line + "'");
      ++s.trials;
      bound.push_back(parse_number("bound", cells[8]));
      if (cells[9] == "1") {
        ++s.checked;
        err.push_back(parse_number("error", cells[7]));
        s.passes += cells[10] == "1";
      }
    }
    const fs::path tf = f.parent_path() / "timings.csv";
    if (fs::exists(tf)) {
      std::ifstream ts(tf);
      std::getline(ts, line);
      while (std::getline(ts, line)) {
        const auto cells = split_csv(line);
        if (cells.size() == 4) core.push_back(parse_number("core_s", cells[2]));
      }
    }
    s.median_error = median(err);
    s.median_bound = median(bound);
    s.median_core_seconds = median(core);
    all.trials += s.trials;
    all.checked += s.checked;
    all.passes += s.passes;
    all_err.insert(all_err.end(), err.begin(), err.end());
    all_bound.insert(all_bound.end(), bound.begin(), bound.end());
    all_core.insert(all_core.end(), core.begin(), core.end());
    out.push_back(s);
  }
  all.median_error = median(all_err);
  all.median_bound = median(all_bound);
  all.median_core_seconds = median(all_core);
  out.push_back(all);
  return out;
}

void report(const fs::path& dir, std::ostream& os) {
  const auto stats = aggregate(dir);
  os << std::left << std::setw(40) << "run" << std::right << std::setw(8) << "trials" << std::setw(9) << "checked"
     << std::setw(8) << "passes" << std::setw(14) << "median_err" << std::setw(14) << "median_bound" << std::setw(14)
     << "median_core_s"
     << "\n";
  for (const auto& s : stats) {
    os << std::left << std::setw(40) << s.path << std::right << std::setw(8) << s.trials << std::setw(9) << s.checked
       << std::setw(8) << s.passes << std::setw(14) << std::setprecision(6) << s.median_error << std::setw(14)
       << s.median_bound << std::setw(14) << s.median_core_seconds << "\n";
  }
}

}  // namespace sqla::experiment
