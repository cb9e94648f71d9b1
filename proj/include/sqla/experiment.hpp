#pragma once

#include "sqla/io.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sqla::experiment {

namespace fs = std::filesystem;

struct SyntheticSpec {
  index_t m = 100;
  index_t n = 100;
  index_t rank = 4;
  double sigma_min = 1.0;
  double sigma_max = 2.0;
  // Frobenius norm of the Gaussian noise relative to the noiseless matrix
  double noise = 0.0;
  bool hermitian = false;
  // alternate eigenvalue signs in the Hermitian case
  bool indefinite = false;
  bool complex_entries = false;
};

struct GeneratedMatrix {
  Mat a;
  Mat clean;
  RVec spectrum;  // sigma_max down to sigma_min, linearly spaced; signed when indefinite
};

// U diag(sigma) V^dagger (or V diag(lambda) V^dagger) with factors from QR of Gaussian matrices
GeneratedMatrix gen_matrix(const SyntheticSpec& spec, Rng& rng);

struct ExperimentConfig {
  std::string pipeline = "even_svt";
  // empty means synthetic
  std::string matrix_file;
  SyntheticSpec synthetic;
  // eps, delta, sigma, eta, r, c, spectral_norm, ...
  std::map<std::string, double> params;
  std::map<std::string, std::string> options;  // function, mode
  std::map<std::string, double> constants;
  index_t trials = 1;
  std::uint64_t seed = 1;
  index_t jobs = 1;
  bool oracle = true;
  index_t oracle_limit = 2000;
  bool save = true;
  std::string out;

  double param(const std::string& key, double fallback) const;
  std::string option(const std::string& key, const std::string& fallback) const;
  double constant(const std::string& key) const;
  double eps() const { return param("eps", 0.3); }
  double delta() const { return param("delta", 0.1); }
};

// keys: pipeline, matrix, m, n, rank, sigma_min, sigma_max, noise, hermitian, indefinite, complex,
// trials, seed, jobs, oracle (on|off), oracle_limit, save, out, function, mode, constant.<name>;
// every other key is a numeric parameter
ExperimentConfig config_from_manifest(const io::Manifest& m);
io::Manifest config_to_manifest(const ExperimentConfig& c);
ExperimentConfig load_config(const fs::path& p);
void validate(const ExperimentConfig& c);

const std::vector<std::string>& pipelines();
// sketch-size constants the pipeline reads, i.e. the ones calibration doubles
std::vector<std::string> size_constants(const std::string& pipeline);

struct TrialResult {
  index_t trial = 0;
  std::uint64_t seed = 0;
  index_t r = 0;
  index_t c = 0;
  double error = 0.0;
  double bound = 0.0;
  bool checked = false;
  bool pass = false;
  double build_seconds = 0.0;
  double core_seconds = 0.0;
  double oracle_seconds = 0.0;
};

struct RunSummary {
  std::vector<TrialResult> trials;
  index_t checked = 0;
  index_t passes = 0;
  double pass_rate = 0.0;
  double required_rate = 0.0;
  bool ok = true;
};

inline constexpr const char* kTrialHeader = "trial,seed,pipeline,rows,cols,r,c,error,bound,checked,pass";
inline constexpr const char* kTimingHeader = "trial,build_s,core_s,oracle_s";
std::string trial_row(const ExperimentConfig& c, index_t rows, index_t cols, const TrialResult& t);

// the instance matrix of a config, from the file or the synthetic spec and the seed
Mat instance_matrix(const ExperimentConfig& c);

// runs all trials; with c.out set writes config.txt, matrix.bin, trials.csv, timings.csv, summary.txt
// and per-trial decompositions under decomp/
RunSummary run_experiment(const ExperimentConfig& c);

// reloads a saved decomposition and recomputes its error against the dense reference
double reverify(const fs::path& out, index_t trial);

struct CalibrationResult {
  std::map<std::string, double> constants;
  index_t doublings = 0;
  double pass_rate = 0.0;
  bool converged = false;
};

// doubles the pipeline's size constants until the pass rate over `instances` instances (seeds derived
// from c.seed) reaches target; gives up after max_doublings
CalibrationResult calibrate(const ExperimentConfig& c, double target = 0.9, index_t instances = 10,
                            index_t max_doublings = 12);

struct RunStats {
  std::string path;
  index_t trials = 0;
  index_t checked = 0;
  index_t passes = 0;
  double median_error = 0.0;
  double median_bound = 0.0;
  double median_core_seconds = 0.0;
};

// one entry per trials.csv under dir plus a final "all" entry over every row
std::vector<RunStats> aggregate(const fs::path& dir);
void report(const fs::path& dir, std::ostream& os);

double median(std::vector<double> v);

}  // namespace sqla::experiment
