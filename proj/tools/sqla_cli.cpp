#include "sqla/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace sqla;
using namespace sqla::experiment;

namespace {

enum Exit { kOk = 0, kValidation = 1, kGuarantee = 2, kIo = 3 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<index_t> trials;
  std::optional<index_t> jobs;
  std::string oracle;
  std::string out;
};

void add_common(CLI::App* app, Flags& f, bool needs_config) {
  auto* c = app->add_option("--config", f.config, "experiment config (key = value)");
  if (needs_config) c->required();
  c->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "64-bit seed");
  app->add_option("--trials", f.trials, "trials per run")->check(CLI::PositiveNumber);
  app->add_option("--jobs", f.jobs, "concurrent trials")->check(CLI::PositiveNumber);
  app->add_option("--oracle", f.oracle, "dense verification")->check(CLI::IsMember({"on", "off"}));
  app->add_option("--out", f.out, "output directory");
}

ExperimentConfig effective(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.trials) c.trials = *f.trials;
  if (f.jobs) c.jobs = *f.jobs;
  if (!f.oracle.empty()) c.oracle = f.oracle == "on";
  if (!f.out.empty()) c.out = f.out;
  return c;
}

int cmd_gen(const Flags& f) {
  const ExperimentConfig c = effective(f);
  require(!c.out.empty(), "gen: --out is required");
  require(c.matrix_file.empty(), "gen: the config names a matrix file; nothing to generate");
  validate(c);
  Rng rng(child_seed(c.seed, 0));
  const GeneratedMatrix g = gen_matrix(c.synthetic, rng);
  const io::fs::path out = c.out;
  io::fs::create_directories(out);
  io::write_matrix(out / "matrix.bin", g.a);
  {
    std::ofstream os(out / "matrix.mtx");
    if (!os) fail(ErrorKind::Io, "cannot write " + (out / "matrix.mtx").string());
    io::write_matrix_market(os, g.a);
  }
  io::write_vector_text(out / "spectrum.txt", g.spectrum.cast<cplx>());
  io::write_manifest(out / "config.txt", config_to_manifest(c));
  std::cout << "wrote " << g.a.rows() << "x" << g.a.cols() << " matrix to " << out.string() << "\n";
  return kOk;
}

int cmd_run(const Flags& f) {
  const ExperimentConfig c = effective(f);
  const RunSummary s = run_experiment(c);
  std::cout << c.pipeline << ": " << c.trials << " trials";
  if (s.checked) {
    std::cout << ", " << s.passes << "/" << s.checked << " within bound (required rate " << s.required_rate << ")";
  } else {
    std::cout << ", no oracle check";
  }
  std::cout << "\n";
  if (!c.out.empty()) std::cout << "results in " << c.out << "\n";
  return s.ok ? kOk : kGuarantee;
}

int cmd_calibrate(const Flags& f) {
  const ExperimentConfig c = effective(f);
  const double target = c.param("target_pass_rate", 0.9);
  const auto instances = static_cast<index_t>(c.param("calibration_instances", 10.0));
  const auto cap = static_cast<index_t>(c.param("max_doublings", 12.0));
  const CalibrationResult res = calibrate(c, target, instances, cap);
  io::Manifest m;
  m["pipeline"] = c.pipeline;
  m["converged"] = res.converged ? "1" : "0";
  m["doublings"] = std::to_string(res.doublings);
  m["pass_rate"] = io::format_double(res.pass_rate);
  m["target_pass_rate"] = io::format_double(target);
  for (const auto& [k, v] : res.constants) m["constant." + k] = io::format_double(v);
  for (const auto& [k, v] : m) std::cout << k << " = " << v << "\n";
  if (!c.out.empty()) {
    io::fs::create_directories(c.out);
    io::write_manifest(io::fs::path(c.out) / "calibration.txt", m);
  }
  if (!res.converged) {
    std::cerr << "calibration did not reach the target after " << res.doublings << " doublings\n";
    return kGuarantee;
  }
  return kOk;
}

int cmd_report(const Flags& f, const std::string& dir) {
  const std::string d = !dir.empty() ? dir : f.out;
  require(!d.empty(), "report: give a directory or --out");
  report(d, std::cout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sampling-based low-rank matrix arithmetic: experiments"};
  app.require_subcommand(1);
  Flags gen_f, run_f, cal_f, rep_f;
  std::string rep_dir;
  auto* gen = app.add_subcommand("gen", "generate a synthetic matrix from a config");
  add_common(gen, gen_f, false);
  auto* run = app.add_subcommand("run", "run trials of a pipeline and check them against the dense oracle");
  add_common(run, run_f, true);
  auto* cal = app.add_subcommand("calibrate", "double sketch-size constants until the pass-rate target is met");
  add_common(cal, cal_f, true);
  auto* rep = app.add_subcommand("report", "summarize every trials.csv under a directory");
  add_common(rep, rep_f, false);
  rep->add_option("dir", rep_dir, "results directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }
  try {
    if (*gen) return cmd_gen(gen_f);
    if (*run) return cmd_run(run_f);
    if (*cal) return cmd_calibrate(cal_f);
    return cmd_report(rep_f, rep_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Io:
        return kIo;
      case ErrorKind::Exhausted:
        return kGuarantee;
      default:
        return kValidation;
    }
  } catch (const io::fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
}
