#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "splatstyle/schedule.hpp"

using namespace splatstyle;

TEST_CASE("build_schedule cumulative products") {
    SUBCASE("constant beta 0.1 over T=3") {
        const NoiseSchedule s = build_schedule(3, 0.1, 0.1, 1, 1, 1);
        CHECK(s.alpha_bar_at(1) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(s.alpha_bar_at(2) == doctest::Approx(0.81).epsilon(1e-12));
        CHECK(s.alpha_bar_at(3) == doctest::Approx(0.729).epsilon(1e-12));
    }
    SUBCASE("default linear schedule, first factor") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 10, 20, 980);
        CHECK(s.alpha_bar_at(1) == doctest::Approx(0.9999).epsilon(1e-12));
    }
    SUBCASE("alpha_bar is the running product, recomputed in long double") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 10, 20, 980);
        long double prod = 1.0L;
        for (int t = 1; t <= 1000; ++t) {
            prod *= 1.0L - static_cast<long double>(s.beta_at(t));
            CHECK(std::abs(static_cast<double>(prod) - s.alpha_bar_at(t)) <=
                  1e-12 * s.alpha_bar_at(t));
        }
    }
    SUBCASE("alpha_bar is strictly decreasing") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 10, 20, 980);
        for (int t = 2; t <= 1000; ++t) CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
    }
}

TEST_CASE("timestep set construction") {
    SUBCASE("degenerate singleton") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 1, 500, 500);
        CHECK(s.timestep_set == std::vector<int>{500});
    }
    SUBCASE("even spacing, endpoints included, distinct") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 10, 20, 980);
        CHECK(s.timestep_set.size() == 10);
        CHECK(s.timestep_set.front() == 20);
        CHECK(s.timestep_set.back() == 980);
        for (std::size_t i = 1; i < s.timestep_set.size(); ++i)
            CHECK(s.timestep_set[i] > s.timestep_set[i - 1]);
    }
    SUBCASE("parameter violations are rejected by name") {
        CHECK_THROWS_WITH_AS(build_schedule(1000, 0.0, 0.02, 10, 20, 980),
                             doctest::Contains("beta_start"), std::invalid_argument);
        CHECK_THROWS_WITH_AS(build_schedule(1000, 1e-4, 1.0, 10, 20, 980),
                             doctest::Contains("beta_end"), std::invalid_argument);
        CHECK_THROWS_WITH_AS(build_schedule(1000, 1e-4, 0.02, 0, 20, 980),
                             doctest::Contains("num_timesteps"), std::invalid_argument);
        CHECK_THROWS_WITH_AS(build_schedule(1000, 1e-4, 0.02, 10, 0, 980),
                             doctest::Contains("t_min"), std::invalid_argument);
        CHECK_THROWS_AS(build_schedule(1000, 1e-4, 0.02, 50, 100, 110), std::invalid_argument);
    }
}

TEST_CASE("ddim_noise closed form") {
    // two steps of beta = 0.1 give alpha_bar = 0.81 at t = 2
    const NoiseSchedule s = build_schedule(2, 0.1, 0.1, 1, 1, 1);

    SUBCASE("scalar example") {
        const MultiViewLatent z0(1, 1, 1, 1, 1.0);
        const MultiViewLatent eps(1, 1, 1, 1, 0.5);
        const MultiViewLatent zt = ddim_noise(z0, 2, eps, s);
        CHECK(zt.data[0] == doctest::Approx(0.9 + std::sqrt(0.19) * 0.5).epsilon(1e-12));
        CHECK(zt.data[0] == doctest::Approx(1.117945).epsilon(1e-6));
    }
    SUBCASE("noise-free case is exact scaling") {
        RandomStream rng(7);
        const MultiViewLatent z0 = oracles::random_stack(rng, 2, 1, 3, 3);
        const MultiViewLatent zt = ddim_noise(z0, 2, MultiViewLatent(2, 1, 3, 3), s);
        const double root = std::sqrt(0.81);
        for (std::size_t i = 0; i < z0.data.size(); ++i)
            CHECK(zt.data[i] == root * z0.data[i]);
    }
    SUBCASE("zero-signal case is exact noise scaling") {
        RandomStream rng(8);
        const MultiViewLatent eps = oracles::random_stack(rng, 2, 1, 3, 3);
        const MultiViewLatent zt = ddim_noise(MultiViewLatent(2, 1, 3, 3), 2, eps, s);
        const double root = std::sqrt(1.0 - 0.81);
        for (std::size_t i = 0; i < eps.data.size(); ++i)
            CHECK(zt.data[i] == root * eps.data[i]);
    }
    SUBCASE("out-of-range timestep rejected") {
        const MultiViewLatent z0(1, 1, 1, 1);
        CHECK_THROWS_AS(ddim_noise(z0, 3, z0, s), std::invalid_argument);
        CHECK_THROWS_AS(ddim_noise(z0, 0, z0, s), std::invalid_argument);
    }
}

TEST_CASE("sample_timestep") {
    SUBCASE("singleton set always returns its element") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 1, 500, 500);
        RandomStream rng(3);
        for (int i = 0; i < 100; ++i) CHECK(sample_timestep(s, rng) == 500);
    }
    SUBCASE("seeded draws reproduce across runs") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 10, 20, 980);
        RandomStream a(42), b(42);
        for (int i = 0; i < 200; ++i) CHECK(sample_timestep(s, a) == sample_timestep(s, b));
    }
    SUBCASE("10k draws over K=4 stay within 3 sigma of uniform") {
        const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 4, 100, 900);
        RandomStream rng(97);
        std::map<int, int> counts;
        for (int i = 0; i < 10000; ++i) counts[sample_timestep(s, rng)]++;
        CHECK(counts.size() == 4);
        const double sigma = std::sqrt(10000 * 0.25 * 0.75);
        for (const auto& [t, n] : counts) CHECK(std::abs(n - 2500.0) <= 3.0 * sigma);
    }
}

TEST_CASE("forward noising statistics at one timestep") {
    const NoiseSchedule s = build_schedule(1000, 1e-4, 0.02, 10, 20, 980);
    const int t = 500;
    const double ab = s.alpha_bar_at(t);
    const double z0 = 1.7;
    RandomStream rng(1234);

    const int draws = 10000;
    double sum = 0.0, sum2 = 0.0;
    MultiViewLatent z(1, 1, 1, 1, z0), eps(1, 1, 1, 1);
    for (int i = 0; i < draws; ++i) {
        eps.data[0] = rng.next_normal();
        const double v = ddim_noise(z, t, eps, s).data[0];
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / draws;
    const double var = sum2 / draws - mean * mean;
    const double expect_mean = std::sqrt(ab) * z0;
    const double expect_var = 1.0 - ab;
    CHECK(std::abs(mean - expect_mean) <= 5.0 * std::sqrt(expect_var / draws));
    CHECK(std::abs(var - expect_var) <= 5.0 * expect_var * std::sqrt(2.0 / (draws - 1)));
}
