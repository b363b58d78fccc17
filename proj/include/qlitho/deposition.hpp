// Deposition-rate profiles.
//
// Two independent routes to the M-photon rate:
//   * brute force: ||e^K U(x)|psi>||^2 evaluated in Fock space (any K);
//   * closed form: prod_j D_{N_j}(theta_j) / (N_j+1)^2 with the Dirichlet
//     kernel D_N(t) = sin^2((N+1)t/2) / sin^2(t/2) and theta_j = 4 pi s_j x - phi_j,
//     valid only for full-order absorption (K = M).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qlitho/fock.hpp"
#include "qlitho/parallel.hpp"
#include "qlitho/textio.hpp"

namespace qlitho {

struct SamplingGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    int samples = 2;

    void validate() const {
        if (!(x_min < x_max)) throw std::invalid_argument("sampling grid needs x_min < x_max");
        if (samples < 2) throw std::invalid_argument("sampling grid needs at least 2 samples");
    }

    double step() const { return (x_max - x_min) / (samples - 1); }

    // Inclusive endpoints; the last sample is exactly x_max.
    double at(int i) const {
        if (i == samples - 1) return x_max;
        return x_min + (x_max - x_min) * static_cast<double>(i) / (samples - 1);
    }

    bool operator==(const SamplingGrid&) const = default;
};

enum class Normalization { raw, peak_unity, pixel_sum_unity };

inline std::string_view to_string(Normalization n) {
    switch (n) {
        case Normalization::raw: return "raw";
        case Normalization::peak_unity: return "peak";
        case Normalization::pixel_sum_unity: return "pixelsum";
    }
    return "raw";
}

inline Normalization parse_normalization(std::string_view s) {
    if (s == "raw") return Normalization::raw;
    if (s == "peak" || s == "peak_unity") return Normalization::peak_unity;
    if (s == "pixelsum" || s == "pixel_sum_unity") return Normalization::pixel_sum_unity;
    throw std::invalid_argument("unknown normalization '" + std::string(s) + "' (raw, peak, pixelsum)");
}

struct DepositionProfile {
    SamplingGrid grid;
    std::vector<double> values;
    Normalization normalization = Normalization::raw;

    double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
};

// ---------------------------------------------------------------------------
// Brute force

inline double brute_force_rate(const PureState& state, double x, int order) {
    return norm_sq(apply_absorption(propagate(state, x), order));
}

inline double brute_force_rate(const MixedState& state, double x, int order) {
    double r = 0.0;
    for (const auto& c : state.components()) r += c.weight * brute_force_rate(c.state, x, order);
    return r;
}

// Precomputes e^K on every basis vector of a state so a profile costs one
// phase sum per final state per sample instead of a full operator application.
class AbsorptionTransfer {
public:
    AbsorptionTransfer(const PureState& state, int order) {
        if (order < 1) throw std::invalid_argument("absorption order must be >= 1");
        const auto& pairs = state.geometry().pairs();
        const std::size_t modes = state.geometry().mode_count();
        std::map<Occupation, std::size_t> slot;
        for (const auto& [occ, amp] : state.amplitudes()) {
            double k = 0.0;
            for (std::size_t j = 0; j < pairs.size(); ++j)
                k += kTwoPi * pairs[j].scaling *
                     (static_cast<double>(occ[2 * j]) - static_cast<double>(occ[2 * j + 1]));
            const std::size_t basis = wavenumbers_.size();
            wavenumbers_.push_back(k);

            AmplitudeMap image{{occ, amp}};
            for (int r = 0; r < order && !image.empty(); ++r) image = annihilate_sum(image, modes);
            for (const auto& [fin, coeff] : image) {
                auto [it, inserted] = slot.emplace(fin, finals_.size());
                if (inserted) finals_.emplace_back();
                finals_[it->second].push_back({basis, coeff});
            }
        }
    }

    double rate(double x) const {
        std::vector<complex> phase(wavenumbers_.size());
        for (std::size_t b = 0; b < phase.size(); ++b) phase[b] = std::polar(1.0, wavenumbers_[b] * x);
        double total = 0.0;
        for (const auto& terms : finals_) {
            complex acc{};
            for (const auto& t : terms) acc += t.coeff * phase[t.basis];
            total += std::norm(acc);
        }
        return total;
    }

    std::size_t final_state_count() const { return finals_.size(); }

private:
    struct Term {
        std::size_t basis;
        complex coeff;
    };
    std::vector<double> wavenumbers_;
    std::vector<std::vector<Term>> finals_;
};

// ---------------------------------------------------------------------------
// Closed form

// D_N(theta) / (N+1)^2, in [0, 1]. Within 1e-9 of the removable singularity
// the analytic limit 1 is returned.
inline double dirichlet_factor(int photons, double theta) {
    const double t = std::remainder(theta, kTwoPi);
    const double half = std::sin(0.5 * t);
    if (std::abs(half) < 1e-9) return 1.0;
    const double ratio = std::sin(0.5 * (photons + 1) * t) / ((photons + 1) * half);
    return std::min(1.0, ratio * ratio);
}

inline double closed_form_rate(const Geometry& geometry, std::span<const double> phases, double x) {
    const auto& pairs = geometry.pairs();
    if (phases.size() != pairs.size())
        throw std::invalid_argument("closed form needs one phase per mode pair");
    double r = 1.0;
    for (std::size_t j = 0; j < pairs.size(); ++j)
        r *= dirichlet_factor(pairs[j].photons, 4.0 * kPi * pairs[j].scaling * x - phases[j]);
    return r;
}

inline double closed_form_rate(const Geometry& geometry, std::span<const double> phases, double x, int order) {
    if (order != geometry.total_photons())
        throw std::invalid_argument("closed form requires full-order absorption");
    return closed_form_rate(geometry, phases, x);
}

// Least common period of the pair kernels, 1/(2 s_j), over pairs with photons.
inline double fundamental_period(const Geometry& geometry) {
    std::vector<double> halves;
    for (const auto& p : geometry.pairs())
        if (p.photons > 0) halves.push_back(0.5 / p.scaling);
    if (halves.empty()) throw std::invalid_argument("geometry carries no photons; rate is constant");
    const double base = *std::max_element(halves.begin(), halves.end());
    for (int m = 1; m <= 4096; ++m) {
        const double candidate = base * m;
        const bool ok = std::all_of(halves.begin(), halves.end(), [&](double h) {
            const double q = candidate / h;
            return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, q);
        });
        if (ok) return candidate;
    }
    throw std::invalid_argument("pair scalings are not commensurate; no common period");
}

// ---------------------------------------------------------------------------
// Plans as states

struct PhaseSetting {
    double weight = 1.0;
    std::vector<double> phases;  // radians, one per pair
};

// Product of reciprocal binomial pairs carrying the pixel phases. A pixel
// phase phi shifts the kernel argument to 4 pi s x - phi, which in state
// language is the relative phase exp(-i phi n_+).
inline PureState realize_state(const Geometry& geometry, std::span<const double> phases) {
    const auto& pairs = geometry.pairs();
    if (phases.size() != pairs.size()) throw std::invalid_argument("one phase per mode pair required");
    PureState out;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        PureState pair = reciprocal_binomial(pairs[j].photons, pairs[j].scaling, pairs[j].index);
        pair = apply_pair_phase(pair, pairs[j].index, -phases[j]);
        out = j == 0 ? std::move(pair) : tensor(out, pair);
    }
    return out;
}

inline MixedState realize_ensemble(const Geometry& geometry, std::span<const PhaseSetting> entries) {
    std::vector<MixedState::Component> comps;
    comps.reserve(entries.size());
    for (const auto& e : entries) comps.push_back({e.weight, realize_state(geometry, e.phases)});
    return MixedState(std::move(comps));
}

// ---------------------------------------------------------------------------
// Profiles

struct StateSource {
    MixedState ensemble;
    int order = 1;
    // Brute-force full-order rate of one pixel state at its peak; 0 when the
    // order is not full, which disables pixel_sum_unity.
    double pixel_unit = 0.0;
};

struct PhaseSource {
    Geometry geometry;
    std::vector<PhaseSetting> entries;
};

inline StateSource state_source(const Geometry& geometry, std::span<const PhaseSetting> entries, int order) {
    StateSource src{realize_ensemble(geometry, entries), order, 0.0};
    if (order == geometry.total_photons()) {
        std::vector<double> zeros(geometry.pair_count(), 0.0);
        src.pixel_unit = brute_force_rate(realize_state(geometry, zeros), 0.0, order);
    }
    return src;
}

namespace detail {

inline void apply_normalization(DepositionProfile& p, double pixel_sum_scale) {
    switch (p.normalization) {
        case Normalization::raw: break;
        case Normalization::peak_unity: {
            const double peak = p.max();
            if (!(peak > 0.0)) throw std::invalid_argument("cannot peak-normalize an all-zero profile");
            for (auto& v : p.values) v /= peak;
            break;
        }
        case Normalization::pixel_sum_unity:
            for (auto& v : p.values) v *= pixel_sum_scale;
            break;
    }
}

}  // namespace detail

inline DepositionProfile profile(const StateSource& source, const SamplingGrid& grid, Normalization mode) {
    grid.validate();
    DepositionProfile out{grid, std::vector<double>(grid.samples, 0.0), mode};
    std::vector<AbsorptionTransfer> transfers;
    transfers.reserve(source.ensemble.size());
    for (const auto& c : source.ensemble.components()) transfers.emplace_back(c.state, source.order);
    const auto& comps = source.ensemble.components();
    parallel_for(static_cast<std::size_t>(grid.samples), [&](std::size_t i) {
        const double x = grid.at(static_cast<int>(i));
        double r = 0.0;
        for (std::size_t c = 0; c < comps.size(); ++c) r += comps[c].weight * transfers[c].rate(x);
        out.values[i] = r;
    });
    double scale = 0.0;
    if (mode == Normalization::pixel_sum_unity) {
        if (!(source.pixel_unit > 0.0))
            throw std::invalid_argument("pixel_sum normalization requires full-order absorption");
        scale = static_cast<double>(source.ensemble.size()) / source.pixel_unit;
    }
    detail::apply_normalization(out, scale);
    return out;
}

inline DepositionProfile profile(const PhaseSource& source, const SamplingGrid& grid, Normalization mode) {
    grid.validate();
    if (source.entries.empty()) throw std::invalid_argument("phase source has no entries");
    DepositionProfile out{grid, std::vector<double>(grid.samples, 0.0), mode};
    parallel_for(static_cast<std::size_t>(grid.samples), [&](std::size_t i) {
        const double x = grid.at(static_cast<int>(i));
        double r = 0.0;
        for (const auto& e : source.entries) r += e.weight * closed_form_rate(source.geometry, e.phases, x);
        out.values[i] = r;
    });
    detail::apply_normalization(out, static_cast<double>(source.entries.size()));
    return out;
}

struct Profile2D {
    SamplingGrid x_grid;
    SamplingGrid y_grid;
    std::vector<double> values;  // values[i * y_samples + j] = rate(x_i, y_j)
    Normalization normalization = Normalization::raw;

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * y_grid.samples + j]; }
};

// The 2D rate of a product state is the product of the X and Y rates.
inline Profile2D profile_2d(const DepositionProfile& px, const DepositionProfile& py) {
    if (px.normalization != py.normalization)
        throw std::invalid_argument("2D product needs matching normalization modes");
    Profile2D out{px.grid, py.grid, {}, px.normalization};
    out.values.resize(px.values.size() * py.values.size());
    for (std::size_t i = 0; i < px.values.size(); ++i)
        for (std::size_t j = 0; j < py.values.size(); ++j) out.values[i * py.values.size() + j] = px.values[i] * py.values[j];
    return out;
}

// |c_h| for h = 0..max_harmonic, c_h = mean_i y_i exp(-2 pi i h (x_i - x_min) / T),
// over the samples of [x_min, x_max) (the duplicated endpoint is dropped).
inline std::vector<double> fourier_harmonics(const DepositionProfile& p, double fundamental_period, int max_harmonic) {
    if (!(fundamental_period > 0.0)) throw std::invalid_argument("fundamental period must be positive");
    const double span = p.grid.x_max - p.grid.x_min;
    const double periods = span / fundamental_period;
    if (std::round(periods) < 1.0 || std::abs(periods - std::round(periods)) > 1e-9 * std::max(1.0, periods))
        throw std::invalid_argument("grid does not span an integer number of fundamental periods");
    const std::size_t n = p.values.size() - 1;
    std::vector<double> mags(static_cast<std::size_t>(max_harmonic) + 1);
    for (int h = 0; h <= max_harmonic; ++h) {
        complex acc{};
        for (std::size_t i = 0; i < n; ++i) {
            const double arg = -kTwoPi * h * (p.grid.at(static_cast<int>(i)) - p.grid.x_min) / fundamental_period;
            acc += p.values[i] * std::polar(1.0, arg);
        }
        mags[h] = std::abs(acc) / static_cast<double>(n);
    }
    return mags;
}

// ---------------------------------------------------------------------------
// Export

inline std::string profile_csv(const DepositionProfile& p, std::span<const std::string> header = {}) {
    std::ostringstream os;
    for (const auto& h : header) os << "# " << h << '\n';
    os << "# normalization " << to_string(p.normalization) << '\n';
    os << "x_lambda,rate\n";
    for (int i = 0; i < p.grid.samples; ++i) os << format_real(p.grid.at(i)) << ',' << format_real(p.values[i]) << '\n';
    return os.str();
}

inline std::string profile2d_csv(const Profile2D& p, std::span<const std::string> header = {}) {
    std::ostringstream os;
    for (const auto& h : header) os << "# " << h << '\n';
    os << "# normalization " << to_string(p.normalization) << '\n';
    os << "# rows ordered by x then y; " << p.x_grid.samples << " x " << p.y_grid.samples << '\n';
    os << "x_lambda,y_lambda,rate\n";
    for (int i = 0; i < p.x_grid.samples; ++i)
        for (int j = 0; j < p.y_grid.samples; ++j)
            os << format_real(p.x_grid.at(i)) << ',' << format_real(p.y_grid.at(j)) << ',' << format_real(p.at(i, j)) << '\n';
    return os.str();
}

}  // namespace qlitho
