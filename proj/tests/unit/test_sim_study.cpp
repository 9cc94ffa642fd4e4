#include <doctest.h>

#include <cmath>
#include <vector>

#include "abundance/errors.hpp"
#include "abundance/sim_study.hpp"
#include "abundance/stats.hpp"
#include "oracles.hpp"

using namespace abundance;
using namespace abundance::sim;

namespace {

ScenarioSpec quick_spec(Scenario id) {
  auto s = scenario_spec(id);
  s.years = 6;
  s.replicates = 3;
  s.mcmc.iterations = 1500;
  s.mcmc.burn_in = 500;
  s.mcmc.thin = 5;
  return s;
}

}  // namespace

TEST_SUITE("sim_study") {

TEST_CASE("scenario defaults") {
  const auto s = scenario_spec(Scenario::I);
  CHECK(s.alpha.row(0) == Eigen::RowVector3d(8, 0, -2));
  CHECK(s.alpha.row(1) == Eigen::RowVector3d(6.5, 0.05, -1));
  CHECK(s.Omega(0, 1) == 0.1);
  CHECK(s.Omega(1, 1) == 1.0);
  CHECK(s.beta_cr.row(0) == Eigen::RowVector3d(-3.5, -2, 0.5));
  CHECK(s.beta_cr.row(1) == Eigen::RowVector3d(-3.5, 0, 0));
  CHECK(s.years == 17);
  CHECK(s.days_in(5) == 4);
  CHECK(s.replicates == 100);
  CHECK(!s.beta_cpue.has_value());
  const std::vector<std::pair<Scenario, std::vector<double>>> table{
      {Scenario::I, {0.1, 0.1}}, {Scenario::II, {0.5, 0.5}}, {Scenario::III, {1, 1}},
      {Scenario::IV, {0.2, 0.8}}, {Scenario::V, {0.8, 0.2}}, {Scenario::VI, {0.1, 0.1}},
      {Scenario::VII, {0.1, 0.1}}};
  for (const auto& [id, s2] : table) CHECK(scenario_spec(id).sigma2 == s2);
  CHECK(scenario_spec(Scenario::VI).beta_cpue->row(0) == Eigen::RowVector3d(-3.5, -1, 0.5));
  CHECK(scenario_spec(Scenario::VII).beta_cpue->row(0) == Eigen::RowVector3d(-3.5, -3, 0.5));
  CHECK(!scenario_spec(Scenario::V).beta_cpue.has_value());
}

TEST_CASE("names and presets") {
  CHECK(parse_scenario("IV") == Scenario::IV);
  CHECK(to_string(Scenario::VII) == "VII");
  CHECK_THROWS_AS(parse_scenario("VIII"), ValidationError);
  CHECK(parse_preset("desk") == Preset::Desk);
  CHECK_THROWS_AS(parse_preset("fast"), ValidationError);
  auto s = scenario_spec(Scenario::II);
  apply_preset(s, Preset::Desk);
  CHECK(s.replicates == 30);
  CHECK(s.mcmc.iterations == 10000);
  CHECK(s.mcmc.burn_in == 3000);
  CHECK(s.mcmc.thin == 5);
}

TEST_CASE("spec validation") {
  auto s = scenario_spec(Scenario::I);
  CHECK_NOTHROW(validate(s));
  s.sigma2 = {0.1};
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = scenario_spec(Scenario::I);
  s.days = {4, 4};
  CHECK_THROWS_AS(validate(s), ValidationError);
  s = scenario_spec(Scenario::I);
  s.Omega = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("population with vanishing noise follows the linear predictor") {
  auto s = scenario_spec(Scenario::I);
  s.Omega = 1e-12 * Eigen::MatrixXd::Identity(2, 2);
  stats::RngStream rng(1);
  const auto pop = generate_population(s, rng);
  REQUIRE(pop.z.rows() == 17);
  for (int t = 0; t < 17; ++t) {
    CHECK(pop.z(t, 0) == 1.0);
    CHECK(pop.z(t, 1) == doctest::Approx((t - 8) / 8.0));
    for (int j = 0; j < 2; ++j) CHECK(std::abs(pop.log_theta(t, j) - s.alpha.row(j).dot(pop.z.row(t))) < 1e-5);
  }
  double prev = -INFINITY;
  for (int t = 0; t < 17; ++t) {
    const double m = s.alpha.row(1).dot(Eigen::RowVector3d(1, scaled_year(t, 17), 0));
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("abundance has the Poisson mean") {
  auto s = scenario_spec(Scenario::I);
  s.alpha.col(2).setZero();
  s.Omega = 1e-12 * Eigen::MatrixXd::Identity(2, 2);
  stats::RngStream rng(2);
  const int R = 10000;
  std::vector<double> n(R);
  for (int r = 0; r < R; ++r) n[r] = static_cast<double>(generate_population(s, rng).N(0, 1));
  const double theta = std::exp(s.alpha(1, 0) + s.alpha(1, 1) * scaled_year(0, 17));
  CHECK(std::abs(stats::mean(n) - theta) < 3 * std::sqrt(theta / R));
}

TEST_CASE("capture data at the detection extremes") {
  auto s = scenario_spec(Scenario::I);
  stats::RngStream rng(3);
  const auto pop = generate_population(s, rng);
  Eigen::MatrixXd sure = Eigen::MatrixXd::Zero(2, 3), never = sure;
  sure.col(0).setConstant(60.0);
  never.col(0).setConstant(-60.0);
  const auto d1 = generate_cr_data(pop, sure, {0.0, 0.0}, s, rng);
  const auto d0 = generate_cr_data(pop, never, {0.0, 0.0}, s, rng);
  for (int t = 0; t < 17; ++t)
    for (int j = 0; j < 2; ++j) {
      CHECK(d1.catches[t][j][0] == pop.N(t, j));
      CHECK(d1.recaptures[t][j][0] == 0);
      CHECK(d1.catches[t][j][1] == pop.N(t, j));
      CHECK(d1.recaptures[t][j][1] == pop.N(t, j));
      for (int k = 0; k < 4; ++k) CHECK(d0.catches[t][j][k] == 0);
    }
}

TEST_CASE("first-day catch has mean N E[p]") {
  auto s = scenario_spec(Scenario::I);
  s.years = 2;
  stats::RngStream rng(4);
  const auto pop = generate_population(s, rng);
  Eigen::MatrixXd beta(2, 3);
  beta << -1.0, 0.5, 0.0, -2.0, 0.0, 0.0;
  const std::vector<double> s2{0.2, 0.0};
  // E[p] for eta ~ N(-1, 0.5^2 + 0.2) by quadrature.
  const double sd = std::sqrt(0.25 + 0.2);
  double ep = 0.0;
  for (int i = -4000; i <= 4000; ++i) {
    const double z = i / 500.0;
    ep += stats::inv_logit(-1.0 + sd * z) * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) / 500.0;
  }
  const int R = 10000;
  std::vector<double> n(R);
  for (int r = 0; r < R; ++r) n[r] = static_cast<double>(generate_cr_data(pop, beta, s2, s, rng).catches[0][0][0]);
  const double se = std::sqrt(stats::variance(n) / R);
  CHECK(std::abs(stats::mean(n) - pop.N(0, 0) * ep) < 3 * se);
}

TEST_CASE("generated data always satisfy the dataset invariants") {
  stats::RngStream rng(5);
  for (int rep = 0; rep < 40; ++rep) {
    auto s = scenario_spec(rep % 2 ? Scenario::III : Scenario::V);
    s.years = 2 + rep % 5;
    s.days.clear();
    for (int t = 0; t < s.years; ++t) s.days.push_back(1 + static_cast<int>(rng.uniform() * 5));
    Eigen::MatrixXd beta(2, 3);
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta.data()[i] = rng.normal();
    beta.col(0).array() -= 1.0;
    s.alpha.col(0).setConstant(4.0);
    const auto pop = generate_population(s, rng);
    const auto d = generate_cr_data(pop, beta, s.sigma2, s, rng);
    CHECK_NOTHROW(abundance::validate(d));
    for (int t = 0; t < s.years; ++t)
      for (int j = 0; j < 2; ++j) {
        CHECK(d.days[t] == s.days[t]);
        CHECK(d.distinct(t, j) <= pop.N(t, j));
      }
    const auto c = derive_cpue(d);
    CHECK_NOTHROW(abundance::validate(c));
  }
}

TEST_CASE("derive_cpue examples") {
  auto s = scenario_spec(Scenario::I);
  s.days.assign(17, 1);
  stats::RngStream rng(6);
  const auto pop = generate_population(s, rng);
  const auto d = generate_cr_data(pop, s.beta_cr, s.sigma2, s, rng);
  const auto c = derive_cpue(d);
  CHECK(c.counts == d.catches);
  CHECK(c.x.size() == d.x.size());
  for (std::size_t t = 0; t < d.x.size(); ++t) CHECK(c.x[t] == d.x[t]);
  CHECK(c.z == d.z);

  s.days.clear();
  const auto d4 = generate_cr_data(pop, s.beta_cr, s.sigma2, s, rng);
  const auto c4 = derive_cpue(d4);
  for (int t = 0; t < 17; ++t) {
    CHECK(c4.days[t] == 1);
    CHECK(c4.effort[t][0] == 1.0);
    for (int j = 0; j < 2; ++j) {
      CHECK(c4.counts[t][j].size() == 1);
      CHECK(c4.counts[t][j][0] == d4.catches[t][j][0]);
    }
  }
}

TEST_CASE("regenerated CPUE uses the given detection coefficients") {
  auto s = scenario_spec(Scenario::I);
  stats::RngStream rng(7);
  const auto pop = generate_population(s, rng);
  const auto d = generate_cr_data(pop, s.beta_cr, s.sigma2, s, rng);
  Eigen::MatrixXd sure = Eigen::MatrixXd::Zero(2, 3);
  sure.col(0).setConstant(60.0);
  const auto c = regenerate_cpue(pop, d, sure, {0.0, 0.0}, rng);
  for (int t = 0; t < 17; ++t)
    for (int j = 0; j < 2; ++j) CHECK(c.counts[t][j][0] == pop.N(t, j));
  for (int t = 0; t < 17; ++t) CHECK(c.x[t].row(0) == d.x[t].row(0));
}

TEST_CASE("run_replicate is deterministic and worker-count independent") {
  const auto s = quick_spec(Scenario::VI);
  const auto a = run_replicate(s, 1);
  const auto b = run_replicate(s, 1);
  REQUIRE(!a.failed);
  CHECK(a.truth == b.truth);
  REQUIRE(a.classes.size() == 2);
  for (int j = 0; j < 2; ++j) {
    CHECK(a.classes[j].naive_mad == b.classes[j].naive_mad);
    CHECK(a.classes[j].transfer_mad == b.classes[j].transfer_mad);
    CHECK(a.classes[j].transfer_u_covered == b.classes[j].transfer_u_covered);
    CHECK(std::isfinite(a.classes[j].naive_mad));
    CHECK(a.classes[j].naive_n_coverage >= 0.0);
    CHECK(a.classes[j].naive_n_coverage <= 1.0);
  }
  CHECK(a.acceptance.count("cr.beta") == 1);
  CHECK(a.acceptance.count("transfer.log_lambda_star") == 1);

  const auto one = run_replicates(s, 1);
  const auto two = run_replicates(s, 2);
  REQUIRE(one.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(one[r].replicate == static_cast<int>(r));
    CHECK(one[r].classes[0].transfer_mad == two[r].classes[0].transfer_mad);
  }
  CHECK(one[1].classes[0].naive_mad == a.classes[0].naive_mad);
}

TEST_CASE("aggregate averages successful replicates") {
  std::vector<ReplicateResult> rs(4);
  const double nm[3] = {10, 20, 60}, tm[3] = {1, 2, 3}, nc[3] = {0.5, 0.25, 0.0};
  const bool nu[3] = {true, false, false}, tu[3] = {true, true, false};
  for (int r = 0; r < 3; ++r) {
    rs[r].replicate = r;
    ClassMetrics c;
    c.naive_mad = nm[r];
    c.transfer_mad = tm[r];
    c.naive_n_coverage = nc[r];
    c.transfer_n_coverage = 1.0 - nc[r];
    c.naive_u_covered = nu[r];
    c.transfer_u_covered = tu[r];
    rs[r].classes = {c};
  }
  rs[3].replicate = 3;
  rs[3].failed = true;
  rs[3].error = "boom";
  const auto s = aggregate(Scenario::II, {0.5}, rs);
  CHECK(s.completed == 3);
  CHECK(s.failed == 1);
  CHECK(s.classes[0].naive_mad == doctest::Approx(30.0));
  CHECK(s.classes[0].transfer_mad == doctest::Approx(2.0));
  CHECK(s.classes[0].naive_n_coverage == doctest::Approx(0.25));
  CHECK(s.classes[0].transfer_n_coverage == doctest::Approx(0.75));
  CHECK(s.classes[0].naive_u_coverage == doctest::Approx(1.0 / 3));
  CHECK(s.classes[0].transfer_u_coverage == doctest::Approx(2.0 / 3));
  std::vector<ReplicateResult> bad(2);
  bad[0].failed = bad[1].failed = true;
  CHECK_THROWS_AS(aggregate(Scenario::I, {0.1}, bad), FitError);
}

}
