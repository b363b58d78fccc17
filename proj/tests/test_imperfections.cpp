#include "qlitho/imperfections.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace qlitho;

namespace {

PureState pixel_state(const Geometry& g, int pixel) { return realize_state(g, phases_for_pixel(g, {pixel})); }

DepositionProfile order_profile(const PureState& s, int K, const SamplingGrid& grid) {
    return profile(StateSource{MixedState::pure(s), K, 0.0}, grid, Normalization::peak_unity);
}

}  // namespace

TEST(Loss, unit_transmission_is_identity) {
    auto s = pixel_state(two_pair_geometry(2, 2), 4);
    auto mix = lossy_mixture(s, {1.0, {}});
    ASSERT_EQ(mix.components().size(), 1u);
    EXPECT_NEAR(std::abs(inner(mix.components()[0].state, s)), 1.0, 1e-14);
}

TEST(Loss, zero_transmission_leaves_vacuum) {
    auto s = pixel_state(two_pair_geometry(2, 2), 4);
    auto mix = lossy_mixture(s, {0.0, {}});
    ASSERT_EQ(mix.components().size(), 1u);
    const auto& v = mix.components()[0].state;
    ASSERT_EQ(v.support_size(), 1u);
    EXPECT_EQ(v.amplitudes().begin()->first, Occupation(4, 0));
    for (double x : {0.0, 0.3}) EXPECT_EQ(brute_force_rate(mix, x, 1), 0.0);
}

TEST(Loss, weights_sum_to_one_and_validation) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        auto g = qlitho::testing::random_geometry(rng);
        auto s = qlitho::testing::random_state(rng, g);
        auto mix = lossy_mixture(s, {u(rng), {}});
        double w = 0.0;
        for (const auto& c : mix.components()) w += c.weight;
        EXPECT_NEAR(w, 1.0, 1e-12);
    }
    auto s = reciprocal_binomial(2);
    EXPECT_THROW(lossy_mixture(s, {1.5, {}}), std::invalid_argument);
    EXPECT_THROW(lossy_mixture(s, {0.5, {0.5}}), std::invalid_argument);
    EXPECT_THROW(lossy_mixture(s, {0.5, {0.5, -0.1}}), std::invalid_argument);
}

TEST(Loss, full_order_rate_scales_by_eta_to_the_m) {
    auto g = two_pair_geometry(2, 2);
    auto s = pixel_state(g, 5);
    const double eta = 0.9;
    auto mix = lossy_mixture(s, {eta, {}});
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.2}) {
        const double ideal = brute_force_rate(s, x, 4);
        const double lossy = brute_force_rate(mix, x, 4);
        if (ideal < 1e-12) {
            EXPECT_LT(lossy, 1e-14);
            continue;
        }
        EXPECT_NEAR(lossy / ideal, 0.6561, 0.6561 * 1e-12) << x;
    }
}

TEST(Loss, every_order_scales_by_eta_to_the_k) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ue(0.05, 0.95), ux(-1.0, 1.0);
    for (int t = 0; t < 15; ++t) {
        auto g = qlitho::testing::random_geometry(rng);
        auto s = qlitho::testing::random_state(rng, g);
        const double eta = ue(rng);
        auto mix = lossy_mixture(s, {eta, {}});
        for (int K = 1; K <= g.total_photons(); ++K) {
            const double x = ux(rng);
            const double ideal = brute_force_rate(s, x, K);
            EXPECT_NEAR(brute_force_rate(mix, x, K), std::pow(eta, K) * ideal, 1e-12 * std::max(1.0, ideal));
        }
    }
}

TEST(Loss, single_loss_branch_is_proportional_to_lower_order) {
    // The one-photon-lost part of a lossy N-photon pair, absorbed at order N-1,
    // has the spatial shape of the ideal (N-1)-order rate.
    const int N = 4;
    auto s = reciprocal_binomial(N);
    auto mix = lossy_mixture(s, {0.8, {}});
    const MixedState::Component* branch = nullptr;
    for (const auto& c : mix.components()) {
        int photons = 0;
        for (auto n : c.state.amplitudes().begin()->first) photons += n;
        if (photons == N - 1) branch = &c;
    }
    ASSERT_NE(branch, nullptr);
    std::vector<double> ratio;
    double worst = 0.0;
    const double r0 = brute_force_rate(branch->state, 0.0, N - 1) / brute_force_rate(s, 0.0, N - 1);
    for (double x : {0.03, 0.11, 0.19, 0.3, 0.41}) {
        const double ideal = brute_force_rate(s, x, N - 1);
        if (ideal < 1e-9) continue;
        worst = std::max(worst, std::abs(brute_force_rate(branch->state, x, N - 1) / ideal - r0));
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(LowerOrder, rejects_full_and_zero_order) {
    auto s = reciprocal_binomial(3);
    SamplingGrid grid{0.0, 0.5, 64};
    EXPECT_THROW(lower_order_profile(s, 3, grid), std::invalid_argument);
    EXPECT_THROW(lower_order_profile(s, 0, grid), std::invalid_argument);
    EXPECT_NO_THROW(lower_order_profile(s, 2, grid));
}

TEST(LowerOrder, single_photon_absorption_is_first_harmonic_only) {
    for (int N : {2, 4, 6}) {
        auto p = lower_order_profile(reciprocal_binomial(N), 1, {0.0, 0.5, 513});
        auto h = fourier_harmonics(p, 0.5, N + 1);
        EXPECT_GT(h[1], 1e-3 * h[0]);
        for (int k = 2; k <= N + 1; ++k) EXPECT_LT(h[k], 1e-12 * h[0]) << "N=" << N << " k=" << k;
    }
}

TEST(Metrics, fwhm_of_cos_squared) {
    SamplingGrid grid{0.0, 1.0, 4001};
    std::vector<double> v(grid.samples);
    for (int i = 0; i < grid.samples; ++i) v[i] = std::pow(std::cos(kPi * grid.at(i)), 2);
    DepositionProfile p{grid, v, Normalization::raw};
    EXPECT_NEAR(fwhm(p), 0.5, 1e-6);
    DepositionProfile flat{grid, std::vector<double>(grid.samples, 1.0), Normalization::raw};
    EXPECT_THROW(fwhm(flat), std::invalid_argument);
    DepositionProfile zero{grid, std::vector<double>(grid.samples, 0.0), Normalization::raw};
    EXPECT_THROW(fwhm(zero), std::invalid_argument);
}

TEST(Degradation, two_mode_monotone_with_missing_top_harmonic) {
    const int M = 4;
    auto g = Geometry({{1, M, 1.0}});
    auto s = pixel_state(g, 3);
    const auto layout = pixel_layout(g);
    SamplingGrid grid{0.0, 0.5, 2001};
    auto ref = order_profile(s, M, grid);
    std::vector<DegradationReport> reports;
    for (int K = M; K >= 1; --K) reports.push_back(degradation_report(order_profile(s, K, grid), ref, layout, {3}));
    EXPECT_NEAR(reports[0].fwhm, 0.0902, 5e-4);
    EXPECT_NEAR(reports[3].fwhm, 0.3136, 5e-4);
    EXPECT_LT(reports[0].exposure_penalty, 1e-9);
    EXPECT_FALSE(reports[0].missing_top_harmonic);
    EXPECT_EQ(reports[0].top_harmonic, M);
    for (std::size_t i = 1; i < reports.size(); ++i) {
        EXPECT_GT(reports[i].fwhm, reports[i - 1].fwhm);
        EXPECT_GT(reports[i].exposure_penalty, reports[i - 1].exposure_penalty);
        EXPECT_GT(reports[i].off_target_fraction, reports[i - 1].off_target_fraction);
        EXPECT_TRUE(reports[i].missing_top_harmonic) << "K=" << M - static_cast<int>(i);
    }
}

TEST(Degradation, chain_degrades_more_than_single_pair) {
    auto single = Geometry({{1, 4, 1.0}});
    auto chain = chain_geometry(2, 4);
    auto s1 = pixel_state(single, 3);
    auto s2 = pixel_state(chain, 7);
    const auto l1 = pixel_layout(single), l2 = pixel_layout(chain);
    ASSERT_EQ(l2.count, 12);
    SamplingGrid g1{0.0, l1.period, 2001}, g2{0.0, l2.period, 4001};
    auto ref1 = order_profile(s1, 4, g1);
    auto ref2 = order_profile(s2, 4, g2);
    for (int K = 1; K <= 3; ++K) {
        auto a = degradation_report(order_profile(s1, K, g1), ref1, l1, {3});
        auto b = degradation_report(order_profile(s2, K, g2), ref2, l2, {7});
        EXPECT_GT(b.off_target_fraction, a.off_target_fraction) << "K=" << K;
        EXPECT_TRUE(b.missing_top_harmonic);
    }
}

TEST(Degradation, trench_ripple_in_expected_window) {
    Geometry g({{1, 10, 1.0}});
    const std::vector<int> t{1, 2, 3, 4, 9, 10, 11};
    auto plan = plan_pattern(g, std::span<const int>(t));
    const auto layout = pixel_layout(g);
    auto p = profile(plan.source(), {0.0, layout.period, 4401}, Normalization::peak_unity);
    const double ripple = pattern_ripple(p, layout, {1, 2, 3, 4, 9, 10, 11});
    EXPECT_GE(ripple, 0.05);
    EXPECT_LE(ripple, 0.15);
    EXPECT_NEAR(ripple, 0.1167, 2e-3);
}

TEST(Degradation, report_record_format) {
    DegradationReport r;
    r.fwhm = 0.25;
    const auto s = degradation_record(3, r);
    EXPECT_EQ(s.rfind("K=3 fwhm=0.25 ", 0), 0u);
    EXPECT_NE(s.find("missing_top_harmonic=0"), std::string::npos);
}
