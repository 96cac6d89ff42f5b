#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pcb/models.hpp"
#include "pcb/quadrature.hpp"
#include "test_support.hpp"

using namespace pcb;
using testsupport::pt;

namespace {

GaussianIidModel example_gaussian() {
    // One phase at t=1, one job type; beta = log 3 gives e^{t beta}-1 = 2,
    // so with alpha=1 the reward is N(0.5, 0.25).
    return GaussianIidModel(GroupStructure({1}), {1.0});
}

}  // namespace

TEST_CASE("bernoulli validation rejects degenerate configurations", "[models]") {
    CHECK_THROWS_AS(BernoulliModel(GroupStructure({2}), 0.0), ConfigError);
    CHECK_THROWS_AS(BernoulliModel(GroupStructure({2}), -1e-3), ConfigError);
    CHECK_THROWS_AS(BernoulliModel(GroupStructure({2}), 0.5), ConfigError);
    // p outside (0,1) is clamped into [eps, 1-eps], never reproduced exactly.
    BernoulliModel m(GroupStructure({2}));
    CHECK(m.success_probability(JobId{1, 2}, pt({0.5, 1.0})) == Catch::Approx(1.0 - 1e-6));
    CHECK(m.success_probability(JobId{1, 1}, pt({0.0, 0.5})) == Catch::Approx(1e-6));
}

TEST_CASE("bernoulli sampling and densities", "[models]") {
    BernoulliModel m(GroupStructure({2}));
    const auto theta = pt({0.2, 0.7});
    RandomStream rng(42);
    for (int k = 0; k < 200; ++k) {
        const double y = m.sample_transition(JobId{1, 1}, theta, 0.0, rng);
        CHECK((y == 0.0 || y == 1.0));
    }
    CHECK(m.log_transition_density(JobId{1, 1}, theta, 0.0, 1.0) ==
          Catch::Approx(std::log(0.2)).epsilon(1e-12));
    CHECK_THROWS_AS(m.log_transition_density(JobId{1, 1}, theta, 0.0, 0.5), DomainError);
    CHECK_THROWS_AS(m.log_transition_density(JobId{2, 1}, theta, 0.0, 1.0), ConfigError);
    CHECK(m.stationary_mean(JobId{1, 1}, theta) == 0.2);
    CHECK(m.stationary_mean(JobId{1, 2}, theta) == 0.7);
}

TEST_CASE("iid families ignore the current state", "[models]") {
    BernoulliModel m(GroupStructure({1}));
    const auto theta = pt({0.35});
    RandomStream a(7), b(7);
    for (int k = 0; k < 50; ++k)
        CHECK(m.sample_transition(JobId{1, 1}, theta, 0.0, a) ==
              m.sample_transition(JobId{1, 1}, theta, 1.0, b));

    // Continuous family: two-sample KS between transitions from distinct x.
    GaussianIidModel g = example_gaussian();
    const auto th = pt({1.0, std::log(3.0)});
    RandomStream r1(11), r2(12);
    std::vector<double> s1, s2;
    for (int k = 0; k < 10000; ++k) {
        s1.push_back(g.sample_transition(JobId{1, 1}, th, -5.0, r1));
        s2.push_back(g.sample_transition(JobId{1, 1}, th, +5.0, r2));
    }
    const double mean = 0.5, sd = 0.5;
    CHECK(testsupport::ks_distance(s1, [&](double x) {
              return testsupport::normal_cdf(x, mean, sd);
          }) < 0.02);
    CHECK(testsupport::ks_distance(s2, [&](double x) {
              return testsupport::normal_cdf(x, mean, sd);
          }) < 0.02);
}

TEST_CASE("gaussian reward map and initial moments", "[models]") {
    GaussianIidModel g = example_gaussian();
    const auto th = pt({1.0, std::log(3.0)});  // alpha=1, e^beta - 1 = 2
    CHECK(g.mean(JobId{1, 1}, th) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(g.sd(JobId{1, 1}, th) == Catch::Approx(0.5).epsilon(1e-12));

    // Monte Carlo moment check against the closed form: 1e5 draws, 3 SE.
    RandomStream rng(123);
    const int n = 100000;
    std::vector<double> xs;
    xs.reserve(n);
    for (int k = 0; k < n; ++k) xs.push_back(g.initial_sample(JobId{1, 1}, th, rng));
    const auto ms = testsupport::mean_std(xs);
    const double se = ms.sd / std::sqrt(static_cast<double>(n));
    CHECK(std::fabs(ms.mean - 0.5) < 3.0 * se);
    CHECK(ms.sd == Catch::Approx(0.5).margin(0.01));

    CHECK(g.log_transition_density(JobId{1, 1}, th, 0.0, 0.5) ==
          Catch::Approx(-std::log(0.5 * std::sqrt(2.0 * 3.14159265358979323846))).epsilon(1e-12));

    CHECK_THROWS_AS(g.mean(JobId{1, 1}, pt({-1.0, 1.0})), ConfigError);
    CHECK_THROWS_AS(GaussianIidModel(GroupStructure({2, 2}), {2.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(GaussianIidModel(GroupStructure({2, 3}), {1.0, 2.0}), ConfigError);
}

TEST_CASE("ar1 stationary start and degenerate step", "[models]") {
    // Two phases, one type; a = 0 in group 1 reduces to the iid law.
    Ar1Model m(GroupStructure({1, 1}), {1.0, 2.0}, {0.0, 0.5});
    const auto th = pt({1.0, std::log(3.0)});
    CHECK(m.stationary_mean(JobId{1, 1}, th) ==
          Catch::Approx(m.innovation_mean(JobId{1, 1}, th)).epsilon(1e-12));
    CHECK(m.stationary_sd(JobId{1, 1}, th) ==
          Catch::Approx(m.innovation_sd(JobId{1, 1}, th)).epsilon(1e-12));
    // Geometric series: stationary mean = mu / (1 - a).
    CHECK(m.stationary_mean(JobId{2, 1}, th) ==
          Catch::Approx(m.innovation_mean(JobId{2, 1}, th) / 0.5).epsilon(1e-12));

    // Deterministic limit of one step: sigma = 0 hook.
    RandomStream rng(5);
    CHECK(ar1_transition_sample(0.5, 1.0, 0.0, 2.0, rng) == Catch::Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(Ar1Model(GroupStructure({1, 1}), {1.0, 2.0}, {0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(Ar1Model(GroupStructure({1, 1}), {1.0, 2.0}, {0.0}), ConfigError);
}

TEST_CASE("ar1 transition density matches shifted normal and normalizes", "[models]") {
    Ar1Model m(GroupStructure({1}), {1.0}, {0.5});
    const auto th = pt({1.0, std::log(3.0)});
    const double mu = m.innovation_mean(JobId{1, 1}, th);
    const double sd = m.innovation_sd(JobId{1, 1}, th);
    const double x = 2.0;
    for (double y : {0.0, 0.7, 2.5}) {
        CHECK(m.log_transition_density(JobId{1, 1}, th, x, y) ==
              Catch::Approx(log_normal_density(y - 0.5 * x, mu, sd)).epsilon(1e-12));
    }
    // Quadrature normalization of the conditional density.
    const double mass = transition_density_mass(m, JobId{1, 1}, th, x);
    CHECK(mass == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("transition densities integrate or sum to one", "[models]") {
    const auto th_b = pt({0.3, 0.8});
    BernoulliModel bern(GroupStructure({2}));
    for (int j = 1; j <= 2; ++j)
        CHECK(transition_density_mass(bern, JobId{1, j}, th_b, 0.0) ==
              Catch::Approx(1.0).epsilon(1e-12));

    GaussianIidModel g(GroupStructure({2, 2}), {1.0, 2.0});
    const auto th_g = pt({1.0, 2.0, 0.9});
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 2; ++j)
            CHECK(transition_density_mass(g, JobId{i, j}, th_g, 0.3) ==
                  Catch::Approx(1.0).margin(1e-6));

    testsupport::LaplaceIidModel lap(GroupStructure({1}), 0.7);
    CHECK(transition_density_mass(lap, JobId{1, 1}, pt({0.4}), 0.0) ==
          Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("log-likelihood-ratio chain identity", "[models]") {
    // l(x,y;t,t'') = l(x,y;t,t') + l(x,y;t',t'') for random triples and
    // in-support (x,y), to machine precision.
    Ar1Model ar(GroupStructure({2, 2}), {1.0, 2.0}, {0.4, -0.3});
    BernoulliModel bern(GroupStructure({3}));
    RandomStream rng(2024);
    for (int rep = 0; rep < 200; ++rep) {
        {
            const auto t1 = pt({rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 1.5)});
            const auto t2 = pt({rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 1.5)});
            const auto t3 = pt({rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.5, 1.5)});
            const JobId job{rep % 2 + 1, rep % 3 % 2 + 1};
            const double x = rng.normal(0.0, 3.0);
            const double y = rng.normal(0.0, 3.0);
            auto l = [&](const ParameterPoint& a, const ParameterPoint& b) {
                return ar.log_transition_density(job, a, x, y) -
                       ar.log_transition_density(job, b, x, y);
            };
            CHECK(l(t1, t3) == Catch::Approx(l(t1, t2) + l(t2, t3)).margin(1e-9));
        }
        {
            const auto t1 = pt({rng.uniform(), rng.uniform(), rng.uniform()});
            const auto t2 = pt({rng.uniform(), rng.uniform(), rng.uniform()});
            const auto t3 = pt({rng.uniform(), rng.uniform(), rng.uniform()});
            const JobId job{1, rep % 3 + 1};
            const double y = rep % 2 == 0 ? 1.0 : 0.0;
            auto l = [&](const ParameterPoint& a, const ParameterPoint& b) {
                return bern.log_transition_density(job, a, 0.0, y) -
                       bern.log_transition_density(job, b, 0.0, y);
            };
            CHECK(l(t1, t3) == Catch::Approx(l(t1, t2) + l(t2, t3)).margin(1e-9));
        }
    }
}

TEST_CASE("stationary mean matches long-run sample mean", "[models]") {
    // 50 independent chains of 2000 stationary-start observations each;
    // the empirical SE comes from the spread of the per-chain means.
    auto run_check = [](const PopulationModel& m, JobId job, const ParameterPoint& th) {
        const int chains = 50, steps = 2000;
        std::vector<double> chain_means;
        RandomStream root(987);
        for (int c = 0; c < chains; ++c) {
            RandomStream rng = root.split(static_cast<uint64_t>(c));
            double x = m.initial_sample(job, th, rng);
            double acc = 0.0;
            for (int t = 0; t < steps; ++t) {
                x = m.sample_transition(job, th, x, rng);
                acc += x;
            }
            chain_means.push_back(acc / steps);
        }
        const auto ms = testsupport::mean_std(chain_means);
        const double se = ms.sd / std::sqrt(static_cast<double>(chains));
        const double target = m.stationary_mean(job, th);
        INFO(m.family_name() << " mean " << ms.mean << " target " << target << " se " << se);
        CHECK(std::fabs(ms.mean - target) < 4.0 * se);
    };
    run_check(BernoulliModel(GroupStructure({1})), JobId{1, 1}, pt({0.3}));
    run_check(GaussianIidModel(GroupStructure({1}), {1.0}), JobId{1, 1},
              pt({1.0, std::log(3.0)}));
    run_check(Ar1Model(GroupStructure({1}), {1.0}, {0.5}), JobId{1, 1},
              pt({1.0, std::log(3.0)}));
}

TEST_CASE("sampled transitions match the analytic law", "[models]") {
    // Empirical CDF vs analytic CDF, KS < 0.02 at 1e4 draws.
    const int n = 10000;
    {
        Ar1Model m(GroupStructure({1}), {1.0}, {0.6});
        const auto th = pt({1.0, std::log(3.0)});
        const double x = 1.4;
        RandomStream rng(31);
        std::vector<double> ys;
        for (int k = 0; k < n; ++k) ys.push_back(m.sample_transition(JobId{1, 1}, th, x, rng));
        const double c = m.transition_center(JobId{1, 1}, th, x);
        const double s = m.transition_scale(JobId{1, 1}, th, x);
        CHECK(testsupport::ks_distance(ys, [&](double y) {
                  return testsupport::normal_cdf(y, c, s);
              }) < 0.02);
    }
    {
        BernoulliModel m(GroupStructure({1}));
        const auto th = pt({0.42});
        RandomStream rng(32);
        int ones = 0;
        for (int k = 0; k < n; ++k)
            ones += m.sample_transition(JobId{1, 1}, th, 0.0, rng) == 1.0 ? 1 : 0;
        CHECK(std::fabs(ones / static_cast<double>(n) - 0.42) < 0.02);
    }
}
