#include "doctest.h"
#include "support.hpp"

#include "sqla/sq_access.hpp"

using namespace sqla;
using testing::chi_square;

namespace {

std::vector<double> vec_probs(const Vec& v) {
  std::vector<double> p(static_cast<size_t>(v.size()));
  const double n2 = v.squaredNorm();
  for (Eigen::Index i = 0; i < v.size(); ++i) p[static_cast<size_t>(i)] = std::norm(v[i]) / n2;
  return p;
}

template <class Draw>
std::vector<double> histogram(size_t n, int draws, Draw&& draw) {
  std::vector<double> c(n, 0.0);
  for (int k = 0; k < draws; ++k) c[draw()] += 1.0;
  return c;
}

}  // namespace

TEST_CASE("alias table and sum tree reproduce weights") {
  Rng rng(1);
  std::vector<double> w{0.0, 1.0, 2.0, 0.0, 7.0};
  AliasTable at(w);
  SumTree st(w);
  CHECK(at.total() == doctest::Approx(10.0));
  CHECK(st.total() == doctest::Approx(10.0));
  auto ca = histogram(5, 100000, [&] { return at.sample(rng); });
  auto cs = histogram(5, 100000, [&] { return st.sample(rng); });
  CHECK(ca[0] == 0.0);
  CHECK(ca[3] == 0.0);
  CHECK(cs[0] == 0.0);
  CHECK(cs[3] == 0.0);
  std::vector<double> p{0.0, 0.1, 0.2, 0.0, 0.7};
  CHECK(chi_square(ca, p, 1e5).pass());
  CHECK(chi_square(cs, p, 1e5).pass());
  CHECK_THROWS_AS(AliasTable(std::vector<double>{0.0, 0.0}).sample(rng), Error);
}

TEST_CASE("vector access: small examples") {
  Rng rng(2);
  Vec v(2);
  v << 3.0, 4.0;
  SqVector s(v);
  CHECK(s.norm() == doctest::Approx(5.0));
  CHECK(s.prob(0) == doctest::Approx(9.0 / 25.0));
  CHECK(s.prob(1) == doctest::Approx(16.0 / 25.0));

  Vec e(3);
  e << 1.0, 0.0, 0.0;
  SqVector se(e);
  for (int k = 0; k < 1000; ++k) CHECK(se.sample(rng) == 0);

  CHECK_THROWS_AS(SqVector(Vec::Zero(4)), Error);
  try {
    SqVector z(Vec::Zero(4));
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::ZeroNorm);
  }
}

TEST_CASE("vector access: chi-square on random vectors, both backends") {
  Rng rng(3);
  for (Mode mode : {Mode::Static, Mode::Dynamic}) {
    Vec v = testing::random_vec(rng, 1000);
    SqVector s(v, mode);
    auto c = histogram(1000, 100000, [&] { return s.sample(rng); });
    CHECK(chi_square(c, vec_probs(v), 1e5).pass());
  }
}

TEST_CASE("dynamic updates") {
  Rng rng(4);
  Vec v(2);
  v << 3.0, 4.0;
  SqVector s(v, Mode::Dynamic);
  s.update_entry(1, 0.0);
  for (int k = 0; k < 200; ++k) CHECK(s.sample(rng) == 0);
  s.update_entry(1, 4.0);
  s.update_entry(0, 4.0);
  CHECK(s.prob(0) == doctest::Approx(0.5));

  SqVector st(v, Mode::Static);
  CHECK_THROWS_AS(st.update_entry(0, 1.0), Error);

  // many interleaved updates agree with a fresh build
  Vec w = testing::random_vec(rng, 300);
  SqVector d(w, Mode::Dynamic);
  std::normal_distribution<double> g;
  for (int k = 0; k < 10000; ++k) {
    index_t i = uniform_index(rng, 300);
    cplx val(g(rng), g(rng));
    if (k % 7 == 0) val = 0.0;
    w[static_cast<Eigen::Index>(i)] = val;
    d.update_entry(i, val);
  }
  SqVector fresh(w);
  CHECK(std::abs(d.root_weight() - d.leaf_weight_sum()) <= 1e-10 * d.leaf_weight_sum());
  for (index_t i = 0; i < 300; ++i) CHECK(d.prob(i) == doctest::Approx(fresh.prob(i)).epsilon(1e-12));
  auto c = histogram(300, 100000, [&] { return d.sample(rng); });
  CHECK(chi_square(c, vec_probs(w), 1e5).pass());
}

TEST_CASE("matrix access") {
  Rng rng(5);
  Mat I = Mat::Identity(2, 2);
  SqMatrix si(I);
  CHECK(si.row_prob(0) == doctest::Approx(0.5));
  for (int k = 0; k < 100; ++k) {
    CHECK(si.sample_in_row(0, rng) == 0);
    CHECK(si.sample_in_row(1, rng) == 1);
  }
  Mat a(2, 2);
  a << 1.0, 1.0, 0.0, 2.0;
  SqMatrix sa(a);
  CHECK(sa.row_prob(0) == doctest::Approx(2.0 / 6.0));
  CHECK(std::sqrt(sa.frob2()) == doctest::Approx(std::sqrt(6.0)));
  CHECK_THROWS_AS(SqMatrix(Mat::Zero(3, 3)), Error);

  Mat z = testing::random_mat(rng, 5, 4);
  z.row(2).setZero();
  SqMatrix sz(z);
  for (int k = 0; k < 2000; ++k) CHECK(sz.sample_row(rng) != 2);
  CHECK(sz.row_norms().norm() == doctest::Approx(std::sqrt(sz.frob2())).epsilon(1e-10));

  for (Mode mode : {Mode::Static, Mode::Dynamic}) {
    Mat b = testing::random_mat(rng, 100, 50);
    SqMatrix sb(b, mode);
    std::vector<double> p(5000);
    for (index_t i = 0; i < 100; ++i)
      for (index_t j = 0; j < 50; ++j) p[i * 50 + j] = sb.entry_prob(i, j);
    auto c = histogram(5000, 100000, [&] {
      auto [i, j] = sb.sample_entry(rng);
      return i * 50 + j;
    });
    CHECK(chi_square(c, p, 1e5).pass());
  }

  SqMatrix dyn(a, Mode::Dynamic);
  dyn.update_entry(0, 0, 0.0);
  dyn.update_entry(0, 1, 0.0);
  for (int k = 0; k < 100; ++k) CHECK(dyn.sample_row(rng) == 1);
}

TEST_CASE("oversampled access and bounds") {
  Rng rng(6);
  Vec v(2), b(2);
  v << 1.0, 1.0;
  b << 2.0, 2.0;
  auto sb = std::make_shared<const SqVector>(b);
  auto u = bounded_access([v](index_t i) { return v[static_cast<Eigen::Index>(i)]; }, sb, 2.0, rng);
  CHECK(u.phi() == doctest::Approx(4.0));

  auto same = OversampledVector::exact(v);
  CHECK(same.phi() == doctest::Approx(1.0));

  // a bound smaller than the entries is caught
  Vec small(2);
  small << 0.5, 0.5;
  CHECK_THROWS_AS(bounded_access([v](index_t i) { return v[static_cast<Eigen::Index>(i)]; },
                                 std::make_shared<const SqVector>(small), std::nullopt, rng),
                  Error);

  // sparse row with entries in [c', c] and uniform bound c on the support: phi <= (c/c')^2
  const double cmax = 2.0, cmin = 0.5;
  Vec row = Vec::Zero(200), bound = Vec::Zero(200);
  std::uniform_real_distribution<double> mag(cmin, cmax);
  for (int k = 0; k < 30; ++k) {
    row[k * 6] = mag(rng);
    bound[k * 6] = cmax;
  }
  auto su = bounded_access([row](index_t i) { return row[static_cast<Eigen::Index>(i)]; },
                           std::make_shared<const SqVector>(bound), row.squaredNorm(), rng);
  CHECK(su.phi() <= (cmax / cmin) * (cmax / cmin));
}

TEST_CASE("rejection sampling") {
  Rng rng(7);
  auto phi1 = OversampledVector::exact(testing::random_vec(rng, 50));
  for (int k = 0; k < 100; ++k) CHECK(rejection_sample(phi1, 10, rng).rounds == 1);

  Vec v(2), b(2);
  v << 1.0, 0.0;
  b << 1.0, 1.0;
  auto u = bounded_access([v](index_t i) { return v[static_cast<Eigen::Index>(i)]; },
                          std::make_shared<const SqVector>(b), 1.0, rng);
  CHECK(u.phi() == doctest::Approx(2.0));
  double rounds = 0;
  for (int k = 0; k < 20000; ++k) {
    auto r = rejection_sample(u, 1000, rng);
    REQUIRE(r.index);
    CHECK(*r.index == 0);
    rounds += static_cast<double>(r.rounds);
  }
  CHECK(20000.0 / rounds == doctest::Approx(0.5).epsilon(0.05));

  Vec w = testing::random_vec(rng, 200);
  Vec w2 = 2.0 * w;
  auto uw = bounded_access([w](index_t i) { return w[static_cast<Eigen::Index>(i)]; },
                           std::make_shared<const SqVector>(w2), w.squaredNorm(), rng);
  std::vector<double> counts(200, 0.0);
  for (int k = 0; k < 100000; ++k) counts[*rejection_sample(uw, 1000, rng).index] += 1.0;
  CHECK(chi_square(counts, vec_probs(w), 1e5).pass());

  auto none = rejection_sample(uw, 0, rng);
  CHECK(!none.index);
  CHECK(rejection_rounds(1.0, std::exp(-1.0)) == 2);
}

TEST_CASE("norm estimation") {
  Rng rng(8);
  auto e = OversampledVector::exact(testing::random_vec(rng, 40));
  CHECK(estimate_norm(e, 0.1, 0.1, rng) == doctest::Approx(*e.norm2).epsilon(1e-12));

  Vec v(2), b(2);
  v << 1.0, 0.0;
  b << 1.0, 1.0;
  auto u = bounded_access([v](index_t i) { return v[static_cast<Eigen::Index>(i)]; },
                          std::make_shared<const SqVector>(b), std::nullopt, rng);
  int inside = 0;
  for (int t = 0; t < 300; ++t) {
    double est = estimate_norm(u, 0.1, 0.01, rng, 2.0);
    inside += (est >= 0.9 && est <= 1.1);
  }
  CHECK(inside >= 297);
  CHECK_THROWS_AS(estimate_norm(u, 0.1, 0.01, rng), Error);
  double rough = estimate_norm(u, 1.0, 0.5, rng, 2.0);
  CHECK(rough <= 2.0);
}

TEST_CASE("linear combinations and closure phi") {
  Rng rng(9);
  Vec e1 = Vec::Zero(3), e2 = Vec::Zero(3);
  e1[0] = 1.0;
  e2[1] = 1.0;
  std::vector<OversampledVector> vs{OversampledVector::exact(e1), OversampledVector::exact(e2)};
  std::vector<cplx> lam{1.0, 1.0};
  auto lc = linear_combination(vs, lam, true);
  CHECK(lc.phi() == doctest::Approx(2.0));
  CHECK(linear_combination_phi(vs, lam, *lc.norm2) == doctest::Approx(2.0));

  Vec a(2), b(2);
  a << 1.0, 1.0;
  b << 1.0, -1.0;
  auto s = linear_combination({OversampledVector::exact(a), OversampledVector::exact(b)}, {1.0, 1.0}, true);
  CHECK(s.phi() == doctest::Approx(2.0));
  for (int k = 0; k < 500; ++k) CHECK(*rejection_sample(s, 100, rng).index == 0);

  auto single = linear_combination({OversampledVector::exact(a)}, {1.0}, true);
  CHECK(single.phi() == doctest::Approx(1.0));

  auto cancel = linear_combination({OversampledVector::exact(a), OversampledVector::exact(a)}, {1.0, -1.0}, true);
  CHECK(std::isinf(cancel.phi()));

  // random combination: bound dominance and the closed form
  std::vector<OversampledVector> parts;
  std::vector<cplx> coeffs;
  for (int t = 0; t < 4; ++t) {
    parts.push_back(OversampledVector::exact(testing::random_vec(rng, 100)));
    coeffs.emplace_back(rng() % 5 + 1.0, 0.5);
  }
  auto r = linear_combination(parts, coeffs, true);
  for (index_t i = 0; i < 100; ++i) CHECK(std::abs(r.bound->query(i)) >= std::abs(r.query(i)) * (1 - 1e-12));
  CHECK(std::abs(r.phi() - linear_combination_phi(parts, coeffs, *r.norm2)) <= 1e-12 * r.phi());
  // sampling from the bound matches |bound(i)|^2
  std::vector<double> p(100), c(100, 0.0);
  for (index_t i = 0; i < 100; ++i) p[i] = r.bound->prob(i);
  for (int k = 0; k < 100000; ++k) c[r.bound->sample(rng)] += 1.0;
  CHECK(chi_square(c, p, 1e5).pass());
}

TEST_CASE("outer products and matrix combinations") {
  Rng rng(10);
  Vec e1 = Vec::Zero(3);
  e1[0] = 1.0;
  auto o = outer_product(OversampledVector::exact(e1), OversampledVector::exact(e1));
  for (int k = 0; k < 100; ++k) {
    auto [i, j] = o.bound->sample_entry(rng);
    CHECK(i == 0);
    CHECK(j == 0);
  }
  CHECK(o.phi() == doctest::Approx(1.0));

  Vec u = testing::random_vec(rng, 12), v = testing::random_vec(rng, 9);
  Vec ub = 2.0 * u;
  auto uo = bounded_access([u](index_t i) { return u[static_cast<Eigen::Index>(i)]; },
                           std::make_shared<const SqVector>(ub), u.squaredNorm(), rng);
  auto vo = OversampledVector::exact(v);
  auto uv = outer_product(uo, vo);
  CHECK(uv.phi() == doctest::Approx(uo.phi() * vo.phi()).epsilon(1e-14));
  CHECK(uv.bound->row_norm2(3) == doctest::Approx(std::norm(ub[3]) * v.squaredNorm()));
  std::vector<double> p(108), c(108, 0.0);
  for (index_t i = 0; i < 12; ++i)
    for (index_t j = 0; j < 9; ++j) p[i * 9 + j] = uv.bound->entry_prob(i, j);
  for (int k = 0; k < 100000; ++k) {
    auto [i, j] = uv.bound->sample_entry(rng);
    c[i * 9 + j] += 1.0;
  }
  CHECK(chi_square(c, p, 1e5).pass());
  CHECK((uv.dense() - u * v.adjoint()).norm() < 1e-12);

  Mat a1 = Mat::Zero(2, 2), a2 = Mat::Zero(2, 2);
  a1(0, 0) = 1.0;
  a2(1, 1) = 1.0;
  auto mc = matrix_linear_combination({OversampledMatrix::exact(a1), OversampledMatrix::exact(a2)}, {1.0, 1.0}, true);
  CHECK(mc.phi() == doctest::Approx(2.0));
  auto one = matrix_linear_combination({OversampledMatrix::exact(a1)}, {2.0}, true);
  CHECK(one.phi() == doctest::Approx(1.0));

  // three random rank-1 terms: two-level sampler matches the bound's entry distribution
  std::vector<OversampledMatrix> terms;
  for (int t = 0; t < 3; ++t)
    terms.push_back(outer_product(OversampledVector::exact(testing::random_vec(rng, 8)),
                                  OversampledVector::exact(testing::random_vec(rng, 7))));
  auto sum = matrix_linear_combination(terms, {1.0, cplx(0.0, 2.0), -0.5}, true);
  std::vector<double> q(56), h(56, 0.0);
  double tot = 0.0;
  for (index_t i = 0; i < 8; ++i)
    for (index_t j = 0; j < 7; ++j) {
      q[i * 7 + j] = std::norm(sum.bound->query(i, j));
      tot += q[i * 7 + j];
      CHECK(std::abs(sum.bound->query(i, j)) >= std::abs(sum.query(i, j)) * (1 - 1e-12));
    }
  CHECK(tot == doctest::Approx(sum.bound_frob2()).epsilon(1e-10));
  for (auto& x : q) x /= tot;
  for (int k = 0; k < 100000; ++k) {
    auto [i, j] = sum.bound->sample_entry(rng);
    h[i * 7 + j] += 1.0;
  }
  CHECK(chi_square(h, q, 1e5).pass());
}
