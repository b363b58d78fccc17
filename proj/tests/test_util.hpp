#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qlitho/fock.hpp"

namespace qlitho::testing {

// Every occupation vector of a loss-free product of pairs.
inline std::vector<Occupation> product_support(const Geometry& g) {
    std::vector<Occupation> out{Occupation{}};
    for (const auto& p : g.pairs()) {
        std::vector<Occupation> next;
        for (const auto& o : out) {
            for (int n = 0; n <= p.photons; ++n) {
                Occupation e = o;
                e.push_back(static_cast<std::uint16_t>(n));
                e.push_back(static_cast<std::uint16_t>(p.photons - n));
                next.push_back(std::move(e));
            }
        }
        out = std::move(next);
    }
    return out;
}

inline Geometry random_geometry(std::mt19937_64& rng, int max_pairs = 3, int max_photons = 3) {
    static const double scalings[] = {1.0, 0.5, 1.0 / 3.0, 0.25, 0.2};
    std::uniform_int_distribution<int> npairs(1, max_pairs), photons(0, max_photons), pick(0, 4);
    std::vector<ModePair> pairs;
    const int n = npairs(rng);
    for (int j = 1; j <= n; ++j) pairs.push_back({j, photons(rng), scalings[pick(rng)]});
    return Geometry(std::move(pairs));
}

// Random amplitudes on the full product support; normalized unless asked otherwise.
inline PureState random_state(std::mt19937_64& rng, const Geometry& g, bool normalized = true) {
    std::normal_distribution<double> gauss;
    AmplitudeMap amps;
    double n2 = 0.0;
    for (auto& occ : product_support(g)) {
        complex a{gauss(rng), gauss(rng)};
        n2 += std::norm(a);
        amps.emplace(std::move(occ), a);
    }
    if (!normalized) return PureState::unnormalized(g, std::move(amps));
    for (auto& [o, a] : amps) a /= std::sqrt(n2);
    return PureState::normalized(g, std::move(amps));
}

inline double max_amplitude_diff(const PureState& a, const PureState& b) {
    double d = 0.0;
    for (const auto& [o, v] : a.amplitudes()) d = std::max(d, std::abs(v - b.amplitude(o)));
    for (const auto& [o, v] : b.amplitudes()) d = std::max(d, std::abs(v - a.amplitude(o)));
    return d;
}

}  // namespace qlitho::testing
