#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "hypergibbs/convexity.hpp"

using namespace hypergibbs;

namespace {

ModelParams P(std::map<std::string, double> v) {
  ModelParams p;
  p.values = std::move(v);
  return p;
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

std::vector<std::vector<std::size_t>> rows_from(Rng& rng, std::size_t r, std::size_t n, std::size_t q) {
  std::vector<std::vector<std::size_t>> rows(r, std::vector<std::size_t>(n));
  for (auto& row : rows)
    for (auto& x : row) x = rng.below(q);
  return rows;
}

}  // namespace

TEST_CASE("restricted definiteness examples") {
  CHECK(restricted_definite_on_r0(mat2(1, 1, 1, 0)) == R0Verdict::yes);
  CHECK(restricted_definite_on_r0(mat2(-1, 0, 0, 1)) == R0Verdict::boundary);
  CHECK(restricted_definite_on_r0(Eigen::MatrixXd::Zero(3, 3)) == R0Verdict::boundary);
  CHECK(restricted_definite_on_r0(mat2(1, 0, 0, 1)) == R0Verdict::no);
  CHECK_THROWS_AS(restricted_definite_on_r0(mat2(1, 2, 0, 1)), std::invalid_argument);
}

TEST_CASE("zero-sum basis is orthonormal and orthogonal to e") {
  for (Eigen::Index n = 2; n <= 6; ++n) {
    auto b = zero_sum_basis(n);
    CHECK((b.transpose() * b - Eigen::MatrixXd::Identity(n - 1, n - 1)).norm() < 1e-12);
    CHECK((b.transpose() * Eigen::VectorXd::Ones(n)).norm() < 1e-12);
  }
}

TEST_CASE("min_alpha_psd examples") {
  auto is = min_alpha_psd(mat2(1, 1, 1, 0), 1.0);
  REQUIRE(is.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(is.alpha == 1.0);
  CHECK(is.minimal_alpha == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(is.describe() == "PsdForAlpha(1)");

  const double em1 = std::exp(-1.0);
  auto potts = min_alpha_psd(mat2(em1, 1, 1, em1), 1.0);
  REQUIRE(potts.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(potts.alpha == 1.0);
  Eigen::MatrixXd shifted = Eigen::MatrixXd::Constant(2, 2, 1.0) - mat2(em1, 1, 1, em1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted);
  CHECK(es.eigenvalues()(0) == doctest::Approx(1 - em1));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1 - em1));

  auto counter = min_alpha_psd(mat2(-1, 0, 0, 1), 1.0);
  CHECK(counter.verdict == PsdCertificate::Verdict::no_alpha);
  CHECK(counter.describe() == "NoAlphaExists");
  REQUIRE(counter.witness.size() == 2);
  CHECK(std::abs(counter.witness.sum()) < 1e-12);

  auto ferro = min_alpha_psd(mat2(std::exp(1.0), std::exp(-1.0), std::exp(-1.0), std::exp(1.0)), std::exp(1.0));
  CHECK(ferro.verdict == PsdCertificate::Verdict::no_alpha);

  const double b = 0.7;
  auto anti = min_alpha_psd(mat2(std::exp(-b), std::exp(b), std::exp(b), std::exp(-b)), std::exp(b));
  REQUIRE(anti.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(anti.alpha == doctest::Approx(std::exp(b)));
  CHECK(anti.minimal_alpha == doctest::Approx(std::cosh(b)).epsilon(1e-8));

  CHECK_THROWS_AS(min_alpha_psd(mat2(1, 2, 0, 1), 1.0), std::invalid_argument);
}

TEST_CASE("certificate JSON") {
  auto j = nlohmann::json::parse(min_alpha_psd(mat2(1, 1, 1, 0), 1.0).to_json());
  CHECK(j["verdict"] == "psd_for_alpha");
  CHECK(j["alpha"] == 1.0);
  CHECK(j["tol"].get<double>() > 0.0);
  auto n = nlohmann::json::parse(min_alpha_psd(mat2(-1, 0, 0, 1), 1.0).to_json());
  CHECK(n["verdict"] == "no_alpha");
  CHECK(n["witness"].size() == 2);
  CHECK_FALSE(n.contains("alpha"));
}

TEST_CASE("certified alpha is PSD and at least j_max") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(4));
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = 2 * rng.uniform() - 1;
    const double jmax = a.maxCoeff();
    auto cert = min_alpha_psd(a, jmax);
    if (cert.verdict != PsdCertificate::Verdict::psd_for_alpha) continue;
    CHECK(cert.alpha >= jmax);
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(n, n, cert.alpha) - a;
    CHECK(min_eigenvalue(s) >= -eigen_tolerance(s));
  }
}

TEST_CASE("partition kernel classification") {
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Ones(5, 5);
  blocks.block(0, 0, 2, 2).setZero();
  blocks.block(3, 3, 2, 2).setZero();
  auto c = partition_kernel_classify(blocks);
  CHECK(c.partition_form);
  REQUIRE(c.classes.size() == 2);
  CHECK(c.classes[0] == std::vector<std::size_t>{0, 1});
  CHECK(c.classes[1] == std::vector<std::size_t>{3, 4});

  Eigen::MatrixXd triple(3, 3);
  triple << 0, 0, 1, 0, 0, 0, 1, 0, 0;
  auto t = partition_kernel_classify(triple);
  CHECK_FALSE(t.partition_form);
  CHECK(t.violation == "transitivity");
  CHECK(t.witness == std::vector<std::size_t>{0, 1, 2});
  CHECK(min_alpha_psd(triple, 1.0).verdict == PsdCertificate::Verdict::no_alpha);

  auto ones = partition_kernel_classify(Eigen::MatrixXd::Ones(4, 4));
  CHECK(ones.partition_form);
  CHECK(ones.classes.empty());

  Eigen::MatrixXd refl(2, 2);
  refl << 1, 0, 0, 0;
  auto r = partition_kernel_classify(refl);
  CHECK_FALSE(r.partition_form);
  CHECK(r.violation == "reflexivity");
  CHECK(r.witness == std::vector<std::size_t>{0, 1});

  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(2, 2, 0.5);
  CHECK_THROWS_AS(partition_kernel_classify(half), std::invalid_argument);
}

TEST_CASE("partition-form kernels certify with alpha = 1") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(8);
    std::vector<int> cls(n);
    for (auto& c : cls) c = static_cast<int>(rng.below(4)) - 1;  // -1 is outside A_0
    std::vector<double> gamma{1.0, rng.uniform() < 0.5 ? 0.0 : 1.0, 1.0};
    Eigen::MatrixXd j = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (cls[a] >= 0 && cls[a] == cls[b]) j(a, b) = 1.0 - gamma[static_cast<std::size_t>(cls[a])];
    auto k = partition_kernel_classify(j);
    CHECK(k.partition_form);
    auto cert = min_alpha_psd(j, 1.0);
    REQUIRE(cert.verdict == PsdCertificate::Verdict::psd_for_alpha);
    CHECK(cert.alpha == 1.0);
  }
}

TEST_CASE("gaussian partition model certifies with alpha = 1") {
  auto m = build_model("gaussian_partition", P({{"kappa", 0.5}, {"cells", 48}}));
  auto mc = certify_model(m);
  CHECK(mc.certificate.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(mc.certificate.alpha == 1.0);
}

TEST_CASE("expected tensor: deterministic r=1 is alpha - J") {
  auto m = build_model("independent_set", P({{"lambda", 1.0}}));
  std::vector<std::vector<std::size_t>> rows{{0, 1}};
  auto t = expected_alpha_minus_j_tensor(m, 1.0, rows);
  CHECK(t[0] == 0.0);
  CHECK(t[1] == 0.0);
  CHECK(t[2] == 0.0);
  CHECK(t[3] == 1.0);
}

TEST_CASE("expected tensor uses one shared draw across replicas") {
  auto m = build_model("ksat", P({{"k", 2}, {"beta", 1.0}}));
  std::vector<std::vector<std::size_t>> rows{{0}, {0}};
  auto t = expected_alpha_minus_j_tensor(m, 1.0, rows);
  // (1 - J)^2 averaged over 4 clauses, one of which is violated by (0, 0)
  const double one = -std::expm1(-1.0);
  CHECK(t[0] == doctest::Approx(one * one / 4));
  // independent draws would give (one / 4)^2 instead
  CHECK(t[0] != doctest::Approx(one * one / 16));
}

TEST_CASE("monte carlo expectation approaches the exact one") {
  auto m = build_model("viana_bray", P({{"beta", 0.8}, {"k", 2}}));
  Rng rng(3);
  auto rows = rows_from(rng, 2, 2, 2);
  auto exact = expected_alpha_minus_j_tensor(m, m.soft.alpha, rows);
  ExpectationOptions opt;
  opt.mode = ExpectationMode::monte_carlo;
  opt.samples = 200000;
  opt.seed = 4;
  auto mc = expected_alpha_minus_j_tensor(m, m.soft.alpha, rows, opt);
  CHECK((exact.data() - mc.data()).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("ksat rank-1 identity examples") {
  const double beta = 0.9;
  std::vector<std::vector<std::size_t>> one{{1}};
  for (int k : {2, 3}) {
    auto m = build_model("ksat", P({{"k", static_cast<double>(k)}, {"beta", beta}}));
    auto t = expected_alpha_minus_j_tensor(m, 1.0, one);
    CHECK(t.size() == 1);
    CHECK(t[0] == doctest::Approx(std::ldexp(1.0, -k) * -std::expm1(-beta)));
  }
  auto zero = build_model("ksat", P({{"k", 3}, {"beta", 0.0}}));
  Rng rng(1);
  auto t0 = expected_alpha_minus_j_tensor(zero, 1.0, rows_from(rng, 2, 2, 2));
  CHECK(t0.data().cwiseAbs().maxCoeff() == 0.0);
  CHECK(ksat_rank1_verify(0.0, 3, rows_from(rng, 2, 2, 2)).exact);

  // brute force over the 4 clause signs, n=2, r=2, K=2
  auto m = build_model("ksat", P({{"k", 2}, {"beta", beta}}));
  std::vector<std::vector<std::size_t>> rows{{0, 1}, {1, 1}};
  auto t = expected_alpha_minus_j_tensor(m, 1.0, rows);
  std::vector<std::size_t> slot(2);
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.unravel(f, slot);
    double brute = 0.0;
    for (std::size_t z = 0; z < 4; ++z) {
      double prod = 1.0;
      for (int l = 0; l < 2; ++l) {
        // replica l digit of each slot
        const std::size_t i1 = l == 0 ? slot[0] / 2 : slot[0] % 2;
        const std::size_t i2 = l == 0 ? slot[1] / 2 : slot[1] % 2;
        const std::size_t a = rows[static_cast<std::size_t>(l)][i1], b = rows[static_cast<std::size_t>(l)][i2];
        const double j = (a * 2 + b == z) ? std::exp(-beta) : 1.0;
        prod *= 1.0 - j;
      }
      brute += prod / 4;
    }
    CHECK(t[f] == doctest::Approx(brute).epsilon(1e-14));
  }
  auto rep = ksat_rank1_verify(beta, 2, rows);
  CHECK(rep.exact);
  CHECK(rep.max_entry_error <= 1e-12);
}

TEST_CASE("ksat rank-1 identity over all small cases") {
  Rng rng(99);
  for (int k : {2, 3})
    for (std::size_t r = 1; r <= 2; ++r)
      for (std::size_t n = 1; n <= 3; ++n)
        for (int rep = 0; rep < 5; ++rep) {
          auto report = ksat_rank1_verify(0.2 + rng.uniform() * 2, k, rows_from(rng, r, n, 2), 16, rng.bits());
          CHECK(report.exact);
        }
}

TEST_CASE("viana-bray odd moments vanish") {
  std::vector<std::pair<double, double>> two{{-1.0, 0.5}, {1.0, 0.5}};
  for (int r : {1, 3, 5}) CHECK(viana_bray_f2_moment(1.3, two, r) == 0.0);
  CHECK(viana_bray_f2_moment(1.3, two, 2) == doctest::Approx(std::sinh(1.3) * std::sinh(1.3)));
  std::vector<std::pair<double, double>> three{{-2.0, 0.3}, {0.0, 0.4}, {2.0, 0.3}};
  for (int r : {1, 3}) {
    auto mc = viana_bray_f2_moment_mc(0.7, three, r, 200000, 11 + r);
    CHECK(std::abs(mc.mean) < 3 * mc.std_error);
  }
  auto two_mc = viana_bray_f2_moment_mc(0.7, three, 2, 200000, 5);
  CHECK(std::abs(two_mc.mean - viana_bray_f2_moment(0.7, three, 2)) < 4 * two_mc.std_error);
}

TEST_CASE("falsifier examples") {
  Rng rng(8);
  Eigen::MatrixXd g(4, 4);
  for (auto& v : g.reshaped()) v = rng.normal();
  Eigen::MatrixXd psd = g * g.transpose();
  FalsifyOptions full;
  full.orthant_only = false;
  full.trials = 2000;
  CHECK_FALSE(convexity_falsify(KArray<double>::from_matrix(psd), full).violation);

  KArray<double> cube(1, 3, 2.0);
  FalsifyOptions orth;
  orth.trials = 2000;
  CHECK_FALSE(convexity_falsify(cube, orth).violation);
  auto v = convexity_falsify(cube, full);
  REQUIRE(v.violation);
  CHECK(v.point(0) < 0.0);
  CHECK(v.second_derivative < 0.0);

  auto ks = build_model("ksat", P({{"k", 3}, {"beta", 1.0}}));
  auto t = expected_alpha_minus_j_tensor(ks, 1.0, rows_from(rng, 2, 2, 2));
  FalsifyOptions many;
  many.trials = 10000;
  CHECK_FALSE(convexity_falsify(t, many).violation);
}

TEST_CASE("falsifier reports the first violating trial regardless of workers") {
  KArray<double> cube(1, 3, 1.0);
  FalsifyOptions a, b;
  a.orthant_only = b.orthant_only = false;
  a.trials = b.trials = 5000;
  a.workers = 1;
  b.workers = 4;
  auto ra = convexity_falsify(cube, a), rb = convexity_falsify(cube, b);
  REQUIRE(ra.violation);
  CHECK(ra.trial == rb.trial);
  CHECK(ra.point == rb.point);
}

TEST_CASE("tensor products of PSD factors stay convex at K = 2") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<KArray<double>> factors;
    for (int l = 0; l < 2; ++l) {
      Eigen::MatrixXd g(3, 3);
      for (auto& v : g.reshaped()) v = rng.normal();
      factors.push_back(KArray<double>::from_matrix(g * g.transpose()));
    }
    FalsifyOptions opt;
    opt.orthant_only = false;
    opt.trials = 500;
    opt.seed = static_cast<Seed>(trial);
    CHECK_FALSE(convexity_falsify(tensor_product<double>(factors), opt).violation);
  }
}

TEST_CASE("viana-bray even K has no orthant violation") {
  Rng rng(31);
  for (int k : {2, 4})
    for (std::size_t r = 1; r <= 3; ++r)
      for (std::size_t n = 1; n <= 3; ++n) {
        if (std::pow(static_cast<double>(n), static_cast<double>(r * k)) > 1 << 16) continue;
        auto m = build_model("viana_bray", P({{"beta", 0.9}, {"k", static_cast<double>(k)}}));
        auto t = expected_alpha_minus_j_tensor(m, m.soft.alpha, rows_from(rng, r, n, 2));
        FalsifyOptions opt;
        opt.trials = 1000;
        opt.seed = rng.bits();
        CHECK_FALSE(convexity_falsify(t, opt).violation);
      }
}

TEST_CASE("interpolation vectors") {
  auto e = interpolation_vector(2, 1);
  CHECK(e.values(0) == 0.5);
  CHECK(e.values(1) == 0.5);
  auto b1 = interpolation_vector(2, 1, 0, 1), b2 = interpolation_vector(2, 1, 1, 1);
  CHECK(b1.values(0) == 1.0);
  CHECK(b2.values(1) == 1.0);
  CHECK((e.values - 0.5 * b1.values - 0.5 * b2.values).cwiseAbs().maxCoeff() == 0.0);

  auto e2 = interpolation_vector(2, 2);
  REQUIRE(e2.values.size() == 4);
  CHECK(e2.values(0) == 0.5);
  CHECK(e2.values(3) == 0.5);
  CHECK(e2.values(1) == 0.0);
  CHECK(e2.values(2) == 0.0);

  for (std::size_t n = 2; n <= 6; ++n)
    for (std::size_t n1 = 1; n1 < n; ++n1)
      for (int r = 1; r <= 3; ++r) CHECK(interpolation_decomposition_error(n, n1, r) < 1e-15);
  CHECK_THROWS_AS(interpolation_vector(3, 1, 2, 2), std::invalid_argument);
}

TEST_CASE("<e, tensor A> equals the naive placement average") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(2);
    const int k = 2 + static_cast<int>(rng.below(2));
    const std::size_t r = 1 + rng.below(2);
    auto m = build_model("xor", P({{"beta", 0.5}, {"k", static_cast<double>(k)}}));
    const auto& j = m.edge_pot.law[rng.below(2)].value;
    auto rows = rows_from(rng, r, n, 2);
    auto factors = alpha_minus_j_factors(j, m.soft.alpha, rows);
    auto t = tensor_product<double>(factors);
    const double form = multilinear_form(t, interpolation_vector(n, static_cast<int>(r)).values);
    double naive = 0.0;
    std::vector<std::size_t> v(static_cast<std::size_t>(k)), spins(static_cast<std::size_t>(k));
    const std::size_t total = static_cast<std::size_t>(std::pow(n, k));
    for (std::size_t f = 0; f < total; ++f) {
      std::size_t rem = f;
      for (int i = k - 1; i >= 0; --i) {
        v[static_cast<std::size_t>(i)] = rem % n;
        rem /= n;
      }
      double prod = 1.0;
      for (std::size_t l = 0; l < r; ++l) {
        for (int i = 0; i < k; ++i) spins[static_cast<std::size_t>(i)] = rows[l][v[static_cast<std::size_t>(i)]];
        prod *= m.soft.alpha - j(spins);
      }
      naive += prod;
    }
    naive /= std::pow(static_cast<double>(n), k);
    CHECK(form == doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("block decomposition inequality for certified models") {
  std::vector<ModelSpec> models{
      build_model("independent_set", P({{"lambda", 1.0}})),
      build_model("potts", P({{"q", 3}, {"beta", 0.8}})),
      build_model("ising", P({{"beta", -0.6}, {"h", 1.3}})),
      build_model("ksat", P({{"k", 3}, {"beta", 1.1}})),
      build_model("viana_bray", P({{"beta", 0.7}, {"k", 2}})),
      build_model("viana_bray", P({{"beta", 0.7}, {"k", 4}})),
  };
  Rng rng(41);
  for (const auto& m : models)
    for (std::size_t n = 2; n <= 3; ++n)
      for (std::size_t r = 1; r <= 2; ++r)
        for (int rep = 0; rep < 3; ++rep) {
          auto rows = rows_from(rng, r, n, m.domain.size());
          auto t = expected_alpha_minus_j_tensor(m, m.soft.alpha, rows);
          FalsifyOptions opt;
          opt.trials = 10000;
          opt.seed = rng.bits();
          REQUIRE_FALSE(convexity_falsify(t, opt).violation);
          const int ri = static_cast<int>(r);
          for (std::size_t n1 = 1; n1 < n; ++n1) {
            const double left = multilinear_form(t, interpolation_vector(n, ri).values);
            const double w1 = static_cast<double>(n1) / static_cast<double>(n);
            const double right = w1 * multilinear_form(t, interpolation_vector(n, ri, 0, n1).values) +
                                 (1 - w1) * multilinear_form(t, interpolation_vector(n, ri, n1, n - n1).values);
            CHECK(left <= right + 1e-12 * std::max(1.0, std::abs(right)));
          }
        }
}

TEST_CASE("certify_model verdicts across the zoo") {
  auto v = [](const ModelSpec& m) { return certify_model(m, 1, 500).certificate; };
  auto is = v(build_model("independent_set", P({{"lambda", 1.0}})));
  CHECK(is.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(is.alpha == 1.0);
  auto potts = v(build_model("potts", P({{"q", 3}, {"beta", 1.0}})));
  CHECK(potts.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(potts.alpha == 1.0);
  auto anti = v(build_model("ising", P({{"beta", -0.5}, {"h", 1.0}})));
  CHECK(anti.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(anti.alpha == doctest::Approx(std::exp(0.5)));
  CHECK(v(build_model("ising", P({{"beta", 0.5}}))).verdict == PsdCertificate::Verdict::no_alpha);
  auto ks = v(build_model("ksat", P({{"k", 3}, {"beta", 1.0}})));
  CHECK(ks.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(ks.alpha == 1.0);
  auto vb = certify_model(build_model("viana_bray", P({{"beta", 0.5}, {"k", 4}})), 1, 500);
  CHECK(vb.certificate.verdict == PsdCertificate::Verdict::psd_for_alpha);
  CHECK(vb.method == "viana_bray_even_k");
  auto odd = certify_model(build_model("xor", P({{"beta", 1.0}, {"k", 3}})), 1, 2000);
  CHECK(odd.certificate.verdict == PsdCertificate::Verdict::inconclusive);
}
