#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "hypergibbs/harness.hpp"

using namespace hypergibbs;

namespace {

ModelParams P(std::map<std::string, double> v) {
  ModelParams p;
  p.values = std::move(v);
  return p;
}

std::shared_ptr<const ModelSpec> shared(const std::string& name, std::map<std::string, double> v) {
  return std::make_shared<const ModelSpec>(build_model(name, P(std::move(v))));
}

ExperimentConfig base(const std::string& experiment, const std::string& model, std::map<std::string, double> v) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.model.model = model;
  cfg.model.params = P(std::move(v));
  cfg.c = Density(1, 1);
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("summarize") {
  auto s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == 2.0);
  CHECK(s.std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(s.n_samples == 3);
  CHECK(summarize({4.0, 4.0}).std_error == 0.0);
}

TEST_CASE("mean log Z examples") {
  auto is = shared("independent_set", {{"lambda", 1.0}});
  auto empty = estimate_mean_logz(is, 5, Density(1, 10), std::nullopt, 10, 1);
  CHECK(empty.mean == doctest::Approx(5 * std::log(2.0)));
  CHECK(empty.std_error == 0.0);

  auto potts = shared("potts", {{"q", 3}, {"beta", 0.0}});
  auto free = estimate_mean_logz(potts, 6, Density(2, 1), std::nullopt, 20, 2);
  CHECK(free.mean == doctest::Approx(6 * std::log(3.0)));
  CHECK(free.std_error == doctest::Approx(0.0).epsilon(1e-12));

  auto a = estimate_mean_logz(is, 8, Density(1, 1), std::nullopt, 2000, 10);
  auto b = estimate_mean_logz(is, 8, Density(1, 1), std::nullopt, 2000, 11);
  CHECK(std::abs(a.mean - b.mean) < 4 * std::hypot(a.std_error, b.std_error));
  CHECK_THROWS_AS(estimate_mean_logz(is, 8, Density(1, 1), std::nullopt, 1, 10), std::invalid_argument);
}

TEST_CASE("sample log Z is worker independent") {
  auto is = shared("independent_set", {{"lambda", 0.7}});
  SampleOptions one, many;
  one.workers = 1;
  many.workers = 3;
  InterpolationPoint pt{3, 4, 4};
  auto a = sample_log_z(is, 8, Density(1, 1), pt, 150, 3, one);
  auto b = sample_log_z(is, 8, Density(1, 1), pt, 150, 3, many);
  CHECK(a == b);
}

TEST_CASE("state cap is enforced before sampling") {
  auto potts = shared("potts", {{"q", 5}, {"beta", 1.0}});
  SampleOptions opt;
  opt.state_cap = 1000;
  CHECK_THROWS_AS(sample_log_z(potts, 6, Density(1, 1), std::nullopt, 4, 1, opt), CapExceeded);
}

TEST_CASE("moment check examples") {
  auto is = std::make_shared<const ModelSpec>(build_model("independent_set", P({{"lambda", 1.0}})));
  Instance g0(is, Hypergraph(3, 2), Potentials{{0, 0, 0}, {}});
  auto chk = moment_inequality_check(g0, 1, 2, 1.0);
  CHECK(chk.pass);
  CHECK(chk.z0 == doctest::Approx(8.0));
  CHECK(chk.left <= chk.right + 1e-12);
  CHECK(chk.min_alpha_slack >= 0.0);

  // Z(G0 + e) with e = (u, v), u != v, is 6; with u = v it is 4.
  // left averages over 9 placements: 6 off-diagonal with (8-6)^2, 3 diagonal with (8-4)^2.
  CHECK(chk.left == doctest::Approx((6 * 4.0 + 3 * 16.0) / 9));
  // block 1 = {0}: only (0,0); block 2 = {1,2}: 2 diagonal, 2 off.
  CHECK(chk.right == doctest::Approx(16.0 / 3 + 2.0 / 3 * (2 * 16.0 + 2 * 4.0) / 4));

  auto r1 = moment_inequality_check(g0, 2, 1, 1.0);
  CHECK(r1.pass);

  CHECK_THROWS_AS(moment_inequality_check(Instance(is, Hypergraph(5, 2), Potentials{{0, 0, 0, 0, 0}, {}}), 1, 1, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(moment_inequality_check(g0, 3, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(moment_inequality_check(g0, 1, 4, 1.0), std::invalid_argument);
}

TEST_CASE("constant edge table at alpha gives zero moments") {
  auto m = build_model("potts", P({{"q", 2}, {"beta", 0.0}}));
  auto model = std::make_shared<const ModelSpec>(m);
  Instance g0(model, Hypergraph(3, 2), Potentials{{0, 0, 0}, {}});
  auto chk = moment_inequality_check(g0, 1, 2, 1.0);
  CHECK(chk.left == 0.0);
  CHECK(chk.right == 0.0);
  CHECK(chk.pass);
}

TEST_CASE("moment experiment over certified models passes") {
  for (auto [name, v] : std::vector<std::pair<std::string, std::map<std::string, double>>>{
           {"independent_set", {{"lambda", 1.5}}},
           {"potts", {{"q", 3}, {"beta", 0.9}}},
           {"ising", {{"beta", -0.4}, {"h", 0.8}}},
           {"ksat", {{"k", 2}, {"beta", 1.2}}},
           {"viana_bray", {{"beta", 0.5}, {"k", 2}}}}) {
    auto cfg = base("moments", name, v);
    cfg.n = 3;
    cfg.n1 = 1;
    cfg.r = 2;
    cfg.samples = 3;
    auto rec = run_experiment(cfg);
    INFO(name);
    CHECK(rec.verdict == Verdict::pass);
    CHECK(rec.get("failures") == 0.0);
  }
}

TEST_CASE("record JSONL and CSV round trip") {
  auto cfg = base("logz_mean", "independent_set", {{"lambda", 1.0}});
  cfg.n = 6;
  cfg.samples = 5;
  cfg.t = 2;
  cfg.n1 = 3;
  auto rec = run_experiment(cfg);
  rec.set("odd", -std::numeric_limits<double>::infinity());
  std::stringstream ss;
  write_jsonl(ss, {rec, rec});
  auto back = read_jsonl(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].same_outcome(rec));
  CHECK(back[0].params == rec.params);
  CHECK(back[0].timestamp == rec.timestamp);
  CHECK(std::isinf(back[1].get("odd")));

  std::stringstream csv;
  write_csv(csv, {rec});
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(header.rfind("experiment,verdict,", 0) == 0);
  CHECK(header.find("model.lambda") != std::string::npos);
  CHECK(header.find("std_error") != std::string::npos);
  CHECK(row.rfind("logz_mean,report_only,", 0) == 0);

  auto parsed = config_from_params(rec.params);
  CHECK(parsed.n == 6);
  CHECK(parsed.t == std::optional<std::size_t>(2));
  CHECK(parsed.c.to_string() == "1");
  auto bad = rec.params;
  bad["bogus"] = 1;
  CHECK_THROWS_AS(config_from_params(bad), std::invalid_argument);
}

TEST_CASE("replay reproduces records bit for bit with different workers") {
  auto cfg = base("interpolate", "independent_set", {{"lambda", 1.0}});
  cfg.n = 6;
  cfg.n1 = 3;
  cfg.samples = 40;
  cfg.workers = 1;
  auto rec = run_experiment(cfg);
  auto again = replay(ExperimentRecord::from_json_line(rec.to_json_line()), 3);
  CHECK(rec.same_outcome(again));

  auto vb = base("moments", "viana_bray", {{"beta", 0.5}});
  vb.model.params.i_law = {{-1.5, 0.25}, {0.0, 0.5}, {1.5, 0.25}};
  vb.n = 3;
  vb.n1 = 2;
  vb.samples = 2;
  auto r2 = run_experiment(vb);
  CHECK(r2.same_outcome(replay(r2, 2)));
}

TEST_CASE("coupled differences have smaller standard errors") {
  auto is = shared("independent_set", {{"lambda", 1.0}});
  auto cmp = coupling_comparison(is, 8, 4, Density(1, 1), 400, 5);
  REQUIRE(cmp.coupled_se.size() == 8);
  double coupled = 0, independent = 0;
  for (std::size_t t = 0; t < 8; ++t) {
    coupled += cmp.coupled_se[t];
    independent += cmp.independent_se[t];
  }
  CHECK(coupled < independent);
}

TEST_CASE("interpolation experiment on the independent set") {
  auto cfg = base("interpolate", "independent_set", {{"lambda", 1.0}});
  cfg.n = 8;
  cfg.n1 = 4;
  cfg.samples = 500;
  auto rec = run_experiment(cfg);
  CHECK(rec.get("certified") == 1.0);
  CHECK(rec.verdict == Verdict::pass);
  CHECK(rec.has("diff_t7"));
  CHECK_FALSE(rec.has("diff_t8"));

  auto ferro = base("interpolate", "ising", {{"beta", 0.5}});
  ferro.n = 4;
  ferro.n1 = 2;
  ferro.samples = 20;
  auto fr = run_experiment(ferro);
  CHECK(fr.get("certified") == 0.0);
  CHECK(fr.verdict == Verdict::report_only);
}

TEST_CASE("concentration and convergence on a free model") {
  auto cfg = base("concentrate", "potts", {{"q", 3}, {"beta", 0.0}});
  cfg.n_list = {4, 6};
  cfg.samples = 10;
  auto rec = run_experiment(cfg);
  CHECK(rec.verdict == Verdict::report_only);
  CHECK(rec.get("std_N4") == doctest::Approx(0.0).epsilon(1e-12));

  auto conv = base("converge", "potts", {{"q", 3}, {"beta", 0.0}});
  conv.n_list = {4, 6, 8};
  conv.samples = 4;
  auto cr = run_experiment(conv);
  for (int n : {4, 6, 8}) CHECK(cr.get("a_over_N" + std::to_string(n)) == doctest::Approx(std::log(3.0)));
  CHECK(cr.get("residual_N8") == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("concentration on the independent set shrinks") {
  auto cfg = base("concentrate", "independent_set", {{"lambda", 1.0}});
  cfg.n_list = {6, 8, 10, 12};
  cfg.samples = 800;
  auto rec = run_experiment(cfg);
  CHECK(rec.get("slope") < 0.0);
}

TEST_CASE("endpoint experiment") {
  auto cfg = base("endpoint", "independent_set", {{"lambda", 1.0}});
  cfg.n = 8;
  cfg.n1 = 3;
  cfg.samples = 600;
  auto rec = run_experiment(cfg);
  CHECK(rec.verdict == Verdict::pass);
  CHECK(rec.get("chi_square_p_value") > 0.001);
}

TEST_CASE("degree experiment") {
  auto cfg = base("degrees", "ksat", {{"k", 3}, {"beta", 1.0}});
  cfg.n_list = {10, 30};
  cfg.samples = 200;
  auto rec = run_experiment(cfg);
  CHECK(rec.verdict == Verdict::pass);
  CHECK(rec.get("bins_N10") > 2);
}

TEST_CASE("chi-square and slope helpers") {
  CHECK(chi_square_p_value({10, 10}, {10, 10}) == doctest::Approx(1.0));
  CHECK(chi_square_p_value({100, 0}, {50, 50}) < 1e-10);
  CHECK(chi_square_p_value({1, 1, 1}, {1, 1, 1}) == 1.0);
  CHECK(fit_slope({0, 1, 2}, {1, 3, 5}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(fit_slope({1, 1}, {0, 1}), std::invalid_argument);
}

TEST_CASE("experiment validation") {
  auto cfg = base("interpolate", "independent_set", {{"lambda", 1.0}});
  cfg.n = 4;
  cfg.n1 = 4;
  cfg.samples = 2;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
  cfg.experiment = "nope";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}
