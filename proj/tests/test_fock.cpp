#include "qlitho/fock.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace qlitho;
using qlitho::testing::max_amplitude_diff;
using qlitho::testing::random_geometry;
using qlitho::testing::random_state;

namespace {

Occupation occ(std::initializer_list<int> v) {
    Occupation o;
    for (int n : v) o.push_back(static_cast<std::uint16_t>(n));
    return o;
}

}  // namespace

TEST(ReciprocalBinomial, zero_photons_is_vacuum) {
    auto s = reciprocal_binomial(0);
    ASSERT_EQ(s.support_size(), 1u);
    EXPECT_EQ(s.amplitude(occ({0, 0})), complex(1.0, 0.0));
}

TEST(ReciprocalBinomial, one_photon) {
    auto s = reciprocal_binomial(1);
    EXPECT_NEAR(s.amplitude(occ({1, 0})).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s.amplitude(occ({0, 1})).real(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(ReciprocalBinomial, two_photons) {
    // n!(2-n)! = 2, 1, 2 and normalization sum 5.
    auto s = reciprocal_binomial(2);
    EXPECT_NEAR(s.amplitude(occ({0, 2})).real(), std::sqrt(2.0 / 5.0), 1e-15);
    EXPECT_NEAR(s.amplitude(occ({1, 1})).real(), std::sqrt(1.0 / 5.0), 1e-15);
    EXPECT_NEAR(s.amplitude(occ({2, 0})).real(), std::sqrt(2.0 / 5.0), 1e-15);
}

TEST(ReciprocalBinomial, factorial_oracle_up_to_twelve) {
    for (int N = 0; N <= 12; ++N) {
        auto fact = [](int n) { return std::tgamma(n + 1.0); };
        double total = 0.0;
        for (int n = 0; n <= N; ++n) total += fact(n) * fact(N - n);
        auto s = reciprocal_binomial(N);
        EXPECT_NEAR(s.norm_sq(), 1.0, 1e-12);
        for (int n = 0; n <= N; ++n)
            EXPECT_NEAR(s.amplitude(occ({n, N - n})).real(), std::sqrt(fact(n) * fact(N - n) / total), 1e-14);
    }
}

TEST(ReciprocalBinomial, rejects_negative) { EXPECT_THROW(reciprocal_binomial(-1), std::invalid_argument); }

TEST(Propagate, zero_is_identity) {
    auto s = reciprocal_binomial(3, 0.25);
    EXPECT_EQ(max_amplitude_diff(propagate(s, 0.0), s), 0.0);
}

TEST(Propagate, quarter_wavelength_single_photon) {
    auto s = propagate(reciprocal_binomial(1), 0.25);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(s.amplitude(occ({1, 0})) - complex(0.0, r)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(s.amplitude(occ({0, 1})) - complex(0.0, -r)), 0.0, 1e-15);
}

TEST(Propagate, periodic_in_inverse_scaling) {
    for (double s : {1.0, 0.5, 0.25, 0.2}) {
        auto st = reciprocal_binomial(4, s);
        auto a = propagate(st, 0.3);
        auto b = propagate(st, 0.3 + 1.0 / s);
        EXPECT_LT(max_amplitude_diff(a, b), 1e-12) << "s=" << s;
    }
}

TEST(PairPhase, identity_and_full_turn) {
    auto s = reciprocal_binomial(3);
    EXPECT_EQ(max_amplitude_diff(apply_pair_phase(s, 1, 0.0), s), 0.0);
    EXPECT_LT(max_amplitude_diff(apply_pair_phase(s, 1, kTwoPi), s), 1e-14);
}

TEST(PairPhase, pi_flips_odd_terms) {
    auto s = reciprocal_binomial(3);
    auto t = apply_pair_phase(s, 1, kPi);
    for (int n = 0; n <= 3; ++n) {
        const double sign = n % 2 ? -1.0 : 1.0;
        EXPECT_LT(std::abs(t.amplitude(occ({n, 3 - n})) - sign * s.amplitude(occ({n, 3 - n}))), 1e-15);
    }
}

TEST(PairPhase, unknown_pair_throws) {
    EXPECT_THROW(apply_pair_phase(reciprocal_binomial(2), 7, 0.1), std::out_of_range);
}

TEST(Tensor, vacuum_pair_keeps_amplitudes) {
    auto a = reciprocal_binomial(2, 1.0, 1);
    auto t = tensor(a, reciprocal_binomial(0, 0.5, 2));
    EXPECT_EQ(t.geometry().pair_count(), 2u);
    for (const auto& [o, v] : a.amplitudes()) {
        Occupation e = o;
        e.push_back(0);
        e.push_back(0);
        EXPECT_EQ(t.amplitude(e), v);
    }
}

TEST(Tensor, two_single_photon_pairs) {
    auto t = tensor(reciprocal_binomial(1, 1.0, 1), reciprocal_binomial(1, 0.5, 2));
    ASSERT_EQ(t.support_size(), 4u);
    for (const auto& [o, v] : t.amplitudes()) EXPECT_NEAR(v.real(), 0.5, 1e-15);
}

TEST(Tensor, overlapping_indices_throw) {
    EXPECT_THROW(tensor(reciprocal_binomial(1), reciprocal_binomial(1)), std::invalid_argument);
}

TEST(Tensor, norm_is_multiplicative_for_unnormalized_inputs) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = random_state(rng, Geometry({{1, 2, 1.0}}), false);
        auto b = random_state(rng, Geometry({{2, 3, 0.25}, {3, 1, 0.5}}), false);
        auto t = tensor(a, b);
        EXPECT_FALSE(t.is_normalized());
        EXPECT_NEAR(std::sqrt(t.norm_sq()), std::sqrt(a.norm_sq()) * std::sqrt(b.norm_sq()),
                    1e-12 * std::sqrt(t.norm_sq()));
    }
}

TEST(Absorption, single_annihilation) {
    auto s = PureState::normalized(Geometry({{1, 1, 1.0}}), {{occ({1, 0}), 1.0}});
    auto r = apply_absorption(s, 1);
    EXPECT_FALSE(r.is_normalized());
    ASSERT_EQ(r.support_size(), 1u);
    EXPECT_NEAR(r.amplitude(occ({0, 0})).real(), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Absorption, beyond_photon_number_is_zero) {
    auto s = reciprocal_binomial(3);
    EXPECT_EQ(norm_sq(apply_absorption(s, 4)), 0.0);
    EXPECT_EQ(apply_absorption(s, 4).support_size(), 0u);
}

TEST(Absorption, rejects_order_zero) { EXPECT_THROW(apply_absorption(reciprocal_binomial(1), 0), std::invalid_argument); }

TEST(Absorption, two_photon_hand_expansion) {
    // e^2 = (a+ + a-)^2 / 2 on W = 2 modes; each |n, 2-n> reaches vacuum with
    // amplitude c_n * 2! / sqrt(n!(2-n)!) / 2.
    const double fact[] = {1.0, 1.0, 2.0};
    complex acc{};
    for (int n = 0; n <= 2; ++n) {
        const double c = std::sqrt(fact[n] * fact[2 - n] / 5.0);
        acc += c * 2.0 / std::sqrt(fact[n] * fact[2 - n]) / 2.0;
    }
    const double expected = std::norm(acc);
    EXPECT_NEAR(norm_sq(apply_absorption(propagate(reciprocal_binomial(2), 0.0), 2)), expected, 1e-14);
    EXPECT_NEAR(expected, 9.0 / 5.0, 1e-14);
}

TEST(NormSq, basics) {
    EXPECT_NEAR(norm_sq(reciprocal_binomial(5)), 1.0, 1e-12);
    EXPECT_EQ(norm_sq(PureState::unnormalized(Geometry({{1, 1, 1.0}}), {})), 0.0);
}

TEST(PureState, rejects_unnormalized_construction) {
    EXPECT_THROW(PureState::normalized(Geometry({{1, 1, 1.0}}), {{occ({1, 0}), 0.9}}), std::invalid_argument);
    EXPECT_THROW(PureState::normalized(Geometry({{1, 1, 1.0}}), {{occ({1, 0, 0}), 1.0}}), std::invalid_argument);
}

TEST(MixedState, weights_must_sum_to_one) {
    auto s = reciprocal_binomial(1);
    EXPECT_NO_THROW(MixedState({{0.25, s}, {0.75, s}}));
    EXPECT_THROW(MixedState({{0.25, s}, {0.7, s}}), std::invalid_argument);
    EXPECT_THROW(MixedState({{-0.5, s}, {1.5, s}}), std::invalid_argument);
}

TEST(ModePair, invariants) {
    EXPECT_THROW(Geometry({{1, 1, 0.0}}), std::invalid_argument);
    EXPECT_THROW(Geometry({{1, 1, 1.5}}), std::invalid_argument);
    EXPECT_THROW(Geometry({{1, -1, 1.0}}), std::invalid_argument);
    EXPECT_THROW(Geometry({{1, 1, 1.0}, {1, 2, 0.5}}), std::invalid_argument);
    Geometry g({{1, 3, 1.0}, {2, 2, 0.5}});
    EXPECT_EQ(g.mode_count(), 4u);
    EXPECT_EQ(g.total_photons(), 5);
}

// ---------------------------------------------------------------------------
// Properties over random states

class FockProperties : public ::testing::Test {
protected:
    std::mt19937_64 rng{20240601};
};

TEST_F(FockProperties, phase_operations_are_unitary) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = random_geometry(rng);
        auto s = random_state(rng, g);
        EXPECT_NEAR(norm_sq(propagate(s, u(rng))), 1.0, 1e-12);
        EXPECT_NEAR(norm_sq(apply_pair_phase(s, 1, u(rng))), 1.0, 1e-12);
    }
}

TEST_F(FockProperties, propagate_and_pair_phase_commute_exactly) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        auto g = random_geometry(rng);
        auto s = random_state(rng, g);
        const double x = u(rng), phi = u(rng);
        const int j = g.pairs().back().index;
        auto a = apply_pair_phase(propagate(s, x), j, phi);
        auto b = propagate(apply_pair_phase(s, j, phi), x);
        // Both are diagonal; the two phase factors multiply in either order.
        EXPECT_LT(max_amplitude_diff(a, b), 1e-15);
    }
}

TEST_F(FockProperties, phase_operations_preserve_support_and_pair_totals) {
    for (int trial = 0; trial < 100; ++trial) {
        auto g = random_geometry(rng);
        auto s = apply_pair_phase(propagate(random_state(rng, g), 0.37), 1, 1.1);
        std::size_t expected = 1;
        for (const auto& p : g.pairs()) expected *= static_cast<std::size_t>(p.photons + 1);
        EXPECT_EQ(s.support_size(), expected);
        for (const auto& [o, a] : s.amplitudes())
            for (std::size_t j = 0; j < g.pair_count(); ++j) EXPECT_EQ(o[2 * j] + o[2 * j + 1], g.pairs()[j].photons);
    }
}

TEST_F(FockProperties, product_of_reciprocal_binomials_has_product_support) {
    for (int trial = 0; trial < 30; ++trial) {
        auto g = random_geometry(rng, 4, 4);
        PureState s;
        std::size_t expected = 1;
        for (std::size_t j = 0; j < g.pair_count(); ++j) {
            const auto& p = g.pairs()[j];
            auto pair = reciprocal_binomial(p.photons, p.scaling, p.index);
            s = j == 0 ? pair : tensor(s, pair);
            expected *= static_cast<std::size_t>(p.photons + 1);
        }
        EXPECT_EQ(s.support_size(), expected);
        EXPECT_NEAR(norm_sq(s), 1.0, 1e-12);
    }
}

TEST_F(FockProperties, absorption_is_linear) {
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 60; ++trial) {
        auto g = random_geometry(rng);
        auto a = random_state(rng, g);
        auto b = random_state(rng, g);
        const complex alpha{gauss(rng), gauss(rng)}, beta{gauss(rng), gauss(rng)};
        const int K = 1 + static_cast<int>(rng() % std::max(1, g.total_photons()));
        auto lhs = apply_absorption(added(scaled(a, alpha), scaled(b, beta)), K);
        auto rhs = added(scaled(apply_absorption(a, K), alpha), scaled(apply_absorption(b, K), beta));
        EXPECT_LT(max_amplitude_diff(lhs, rhs), 1e-12);
    }
}

TEST_F(FockProperties, text_round_trip) {
    for (int trial = 0; trial < 30; ++trial) {
        auto s = random_state(rng, random_geometry(rng));
        auto back = state_from_text(to_text(s));
        EXPECT_EQ(back.geometry(), s.geometry());
        EXPECT_EQ(back.amplitudes(), s.amplitudes());
        EXPECT_EQ(to_text(back), to_text(s));
    }
}

TEST(StateText, rows_are_sorted_by_occupation) {
    const std::string text = to_text(reciprocal_binomial(2));
    EXPECT_EQ(text.substr(0, text.find('\n')), "pair 1 2 1");
    const auto first = text.find("0 2 |");
    const auto second = text.find("1 1 |");
    const auto third = text.find("2 0 |");
    EXPECT_LT(first, second);
    EXPECT_LT(second, third);
}
