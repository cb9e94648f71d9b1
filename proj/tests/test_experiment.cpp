#include <doctest.h>

#include "sqla/experiment.hpp"
#include "support.hpp"

#include <fstream>
#include <sstream>

using namespace sqla;
using namespace sqla::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sqla_test_experiment_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return static_cast<int>(e.kind());
  }
  return -1;
}

const int kValidation = static_cast<int>(ErrorKind::Validation);

ExperimentConfig svt_config() {
  ExperimentConfig c;
  c.pipeline = "even_svt";
  c.synthetic = {60, 50, 3, 1.0, 2.0};
  c.params = {{"eps", 0.3}, {"delta", 0.1}, {"r", 400}, {"c", 400}, {"sigma", 0.9}, {"eta", 1.0 / 6.0}};
  c.trials = 4;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_CASE("gen_matrix spectrum, norms and noise") {
  Rng rng(1);
  SyntheticSpec s{30, 20, 1, 1.0, 1.0};
  auto g = gen_matrix(s, rng);
  CHECK(g.a.norm() == doctest::Approx(1.0).epsilon(1e-12));

  s = {40, 30, 4, 0.5, 2.0};
  g = gen_matrix(s, rng);
  const RVec sv = Eigen::BDCSVD<Mat>(g.a).singularValues();
  const double expect[] = {2.0, 1.5, 1.0, 0.5};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(sv[i] - expect[i]) <= 1e-8);
  CHECK(sv[4] <= 1e-8);

  s = {120, 100, 5, 1.0, 2.0, 0.1};
  g = gen_matrix(s, rng);
  Eigen::BDCSVD<Mat> svd(g.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Mat trunc = svd.matrixU().leftCols(5) * svd.singularValues().head(5).cast<cplx>().asDiagonal() *
                    svd.matrixV().leftCols(5).adjoint();
  const double frac = (g.a - trunc).norm() / g.a.norm();
  CHECK(frac == doctest::Approx(0.1).epsilon(0.2));

  SyntheticSpec h{20, 20, 3, 1.0, 3.0};
  h.hermitian = true;
  h.indefinite = true;
  h.complex_entries = true;
  g = gen_matrix(h, rng);
  CHECK((g.a - g.a.adjoint()).norm() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat> es(g.a);
  const RVec ev = es.eigenvalues();
  CHECK(ev[0] == doctest::Approx(-2.0));
  CHECK(ev[19] == doctest::Approx(3.0));
  CHECK(ev[18] == doctest::Approx(1.0));

  CHECK(kind_of([&] { gen_matrix({5, 5, 6, 1.0, 1.0}, rng); }) == kValidation);
  CHECK(kind_of([&] { gen_matrix({5, 5, 2, 2.0, 1.0}, rng); }) == kValidation);
}

TEST_CASE("config parsing and validation") {
  io::Manifest m{{"pipeline", "even_svt"}, {"m", "80"},       {"rank", "3"},         {"trials", "5"},
                 {"seed", "99"},          {"oracle", "off"}, {"function", "identity"}, {"constant.r", "0.5"},
                 {"eps", "0.2"},          {"hermitian", "on"}};
  const auto c = config_from_manifest(m);
  CHECK(c.synthetic.m == 80);
  CHECK(c.synthetic.rank == 3);
  CHECK(c.trials == 5);
  CHECK(c.seed == 99);
  CHECK_FALSE(c.oracle);
  CHECK(c.synthetic.hermitian);
  CHECK(c.option("function", "") == "identity");
  CHECK(c.constant("r") == 0.5);
  CHECK(c.constant("c") == 1.0);
  CHECK(c.eps() == 0.2);
  const auto back = config_from_manifest(config_to_manifest(c));
  CHECK(config_to_manifest(back) == config_to_manifest(c));

  CHECK(kind_of([] { config_from_manifest({{"trials", "2.5"}}); }) == kValidation);
  CHECK(kind_of([] { config_from_manifest({{"oracle", "maybe"}}); }) == kValidation);
  CHECK(kind_of([] { config_from_manifest({{"eps", "abc"}}); }) == kValidation);

  ExperimentConfig bad = svt_config();
  bad.trials = 0;
  CHECK(kind_of([&] { validate(bad); }) == kValidation);
  bad = svt_config();
  bad.params["eps"] = 1.5;
  CHECK(kind_of([&] { validate(bad); }) == kValidation);
  bad = svt_config();
  bad.pipeline = "nonsense";
  CHECK(kind_of([&] { validate(bad); }) == kValidation);
  bad = svt_config();
  bad.pipeline = "eigen_transform";
  CHECK(kind_of([&] { validate(bad); }) == kValidation);
  bad = svt_config();
  bad.constants["r"] = 0.0;
  CHECK(kind_of([&] { validate(bad); }) == kValidation);
}

TEST_CASE("run is deterministic and independent of the job count") {
  const fs::path d1 = scratch("det1"), d2 = scratch("det2"), d3 = scratch("det3");
  ExperimentConfig c = svt_config();
  c.out = d1.string();
  const auto s1 = run_experiment(c);
  c.out = d2.string();
  run_experiment(c);
  c.out = d3.string();
  c.jobs = 3;
  run_experiment(c);
  const std::string body = slurp(d1 / "trials.csv");
  CHECK(body == slurp(d2 / "trials.csv"));
  CHECK(body == slurp(d3 / "trials.csv"));
  CHECK(body.rfind(kTrialHeader, 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 5);
  for (const char* f : {"config.txt", "matrix.bin", "timings.csv", "summary.txt"}) CHECK(fs::exists(d1 / f));
  CHECK(s1.checked == 4);
  CHECK(s1.pass_rate >= 0.75);

  // single trial, rerun from the written config
  ExperimentConfig one = load_config(d1 / "config.txt");
  one.trials = 1;
  one.out = (d2 / "one").string();
  run_experiment(one);
  one.out = (d3 / "one").string();
  run_experiment(one);
  CHECK(slurp(d2 / "one" / "trials.csv") == slurp(d3 / "one" / "trials.csv"));

  // every checked row reproduces from the saved decomposition
  for (const auto& t : s1.trials) CHECK(reverify(d1, t.trial) == doctest::Approx(t.error).epsilon(1e-9));
  for (const auto& d : {d1, d2, d3}) fs::remove_all(d);
}

TEST_CASE("oracle off and the oracle limit skip checks") {
  ExperimentConfig c = svt_config();
  c.trials = 2;
  c.oracle = false;
  auto s = run_experiment(c);
  CHECK(s.checked == 0);
  CHECK(s.ok);
  c.oracle = true;
  c.oracle_limit = 10;
  s = run_experiment(c);
  CHECK(s.checked == 0);
}

TEST_CASE("every pipeline runs and re-verifies") {
  struct Case {
    std::string pipeline;
    SyntheticSpec spec;
    std::map<std::string, double> params;
    std::map<std::string, std::string> options;
  };
  SyntheticSpec herm{40, 40, 3, 1.0, 1.0};
  herm.hermitian = true;
  herm.indefinite = true;
  const std::vector<Case> cases{
      {"singular_values", {60, 40, 4, 1.0, 2.0}, {{"eps", 0.1}, {"r", 300}, {"c", 300}}, {}},
      {"eigen_transform",
       herm,
       {{"eps", 0.3}, {"r", 300}, {"c", 1500}, {"pool_per_mean", 20000}, {"pool_groups", 9}},
       {{"function", "exp_neg"}}},
      {"regression",
       {60, 40, 3, 1.0, 2.0},
       {{"eps", 0.3}, {"r", 2000}, {"c", 10000}, {"pool_per_mean", 20000}, {"pool_groups", 9}},
       {}},
      {"hamiltonian", herm, {{"eps", 0.3}, {"r", 300}, {"c", 2000}}, {}},
      {"recommend", {40, 40, 3, 1.0, 2.0}, {{"eps", 0.2}, {"r", 300}, {"c", 1000}, {"row_samples", 2000}}, {}},
  };
  for (const auto& k : cases) {
    CAPTURE(k.pipeline);
    ExperimentConfig c;
    c.pipeline = k.pipeline;
    c.synthetic = k.spec;
    c.params = k.params;
    c.options = k.options;
    c.trials = 3;
    c.seed = 5;
    const fs::path d = scratch("pipe_" + k.pipeline);
    c.out = d.string();
    const auto s = run_experiment(c);
    CHECK(s.checked == 3);
    CHECK(s.passes >= 2);
    for (const auto& t : s.trials) {
      CHECK(t.r > 0);
      CHECK(reverify(d, t.trial) == doctest::Approx(t.error).epsilon(1e-9));
    }
    fs::remove_all(d);
  }
}

TEST_CASE("calibration doubles to convergence and respects the cap") {
  ExperimentConfig c = svt_config();
  c.params.erase("r");
  c.params.erase("c");
  c.options["function"] = "identity";
  c.trials = 1;
  c.constants["r"] = std::pow(2.0, -12);
  c.constants["c"] = std::pow(2.0, -12);
  const auto res = calibrate(c);
  REQUIRE(res.converged);
  CHECK(res.doublings >= 1);
  CHECK(res.constants.at("r") <= 64.0);
  CHECK(res.constants.at("r") == doctest::Approx(std::pow(2.0, -12 + static_cast<int>(res.doublings))));
  CHECK(res.pass_rate >= 0.9);

  ExperimentConfig again = c;
  again.constants = res.constants;
  const auto same = calibrate(again);
  CHECK(same.converged);
  CHECK(same.doublings == 0);
  CHECK(same.constants == res.constants);

  const auto capped = calibrate(c, 0.9, 10, 2);
  CHECK_FALSE(capped.converged);
  CHECK(capped.doublings == 2);

  ExperimentConfig fixed = svt_config();
  CHECK(kind_of([&] { calibrate(fixed); }) == kValidation);
}

TEST_CASE("report aggregates runs") {
  const fs::path root = scratch("report");
  fs::create_directories(root / "empty");
  CHECK(kind_of([&] { aggregate(root / "empty"); }) == static_cast<int>(ErrorKind::Io));
  CHECK(kind_of([&] { aggregate(root / "missing"); }) == static_cast<int>(ErrorKind::Io));

  ExperimentConfig c = svt_config();
  c.trials = 3;
  c.out = (root / "a").string();
  const auto sa = run_experiment(c);
  auto one = aggregate(root / "a");
  REQUIRE(one.size() == 2);
  CHECK(one[0].trials == 3);
  CHECK(one[0].passes == sa.passes);
  std::ostringstream text;
  report(root / "a", text);
  CHECK(text.str().find((root / "a").string()) != std::string::npos);

  c.seed = 18;
  c.trials = 4;
  c.out = (root / "b").string();
  const auto sb = run_experiment(c);
  const auto all = aggregate(root);
  REQUIRE(all.size() == 3);
  std::vector<double> ea, eall;
  for (const auto& t : sa.trials) eall.push_back(t.error);
  for (const auto& t : sb.trials) eall.push_back(t.error);
  for (const auto& t : sa.trials) ea.push_back(t.error);
  std::sort(ea.begin(), ea.end());
  std::sort(eall.begin(), eall.end());
  CHECK(all[0].median_error == doctest::Approx(ea[1]));
  CHECK(all[2].trials == 7);
  CHECK(all[2].median_error == doctest::Approx(eall[3]));
  CHECK(all[2].passes == sa.passes + sb.passes);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  fs::remove_all(root);
}
