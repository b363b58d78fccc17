// Degradation of the deposition rate by photon loss and by absorption
// processes of lower order than the photon number of the state.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlitho/deposition.hpp"
#include "qlitho/fock.hpp"
#include "qlitho/planner.hpp"
#include "qlitho/textio.hpp"

namespace qlitho {

struct LossModel {
    double transmission = 1.0;          // eta, applied to every mode
    std::vector<double> per_mode;       // optional override, one eta per mode

    double eta(std::size_t mode) const { return per_mode.empty() ? transmission : per_mode.at(mode); }

    void validate(std::size_t modes) const {
        auto bad = [](double e) { return !(e >= 0.0 && e <= 1.0); };
        if (bad(transmission)) throw std::invalid_argument("transmission must lie in [0, 1]");
        if (!per_mode.empty()) {
            if (per_mode.size() != modes) throw std::invalid_argument("per-mode transmission needs one value per mode");
            if (std::any_of(per_mode.begin(), per_mode.end(), bad))
                throw std::invalid_argument("transmission must lie in [0, 1]");
        }
    }
};

namespace detail {

inline double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
    return b;
}

// Calls fn(loss) for every loss vector 0 <= loss <= occ.
template <typename Fn>
void for_each_loss(const Occupation& occ, Fn&& fn) {
    Occupation loss(occ.size(), 0);
    while (true) {
        fn(loss);
        std::size_t m = 0;
        while (m < occ.size() && loss[m] == occ[m]) loss[m++] = 0;
        if (m == occ.size()) return;
        ++loss[m];
    }
}

}  // namespace detail

// Each photon in mode m survives with probability eta_m (a beam splitter whose
// loss port is traced out). Branches are labelled by the lost photon numbers;
// branches whose conditional states coincide up to a global phase are merged.
inline MixedState lossy_mixture(const PureState& state, const LossModel& loss) {
    const std::size_t modes = state.geometry().mode_count();
    loss.validate(modes);
    std::map<Occupation, AmplitudeMap> branches;
    for (const auto& [occ, amp] : state.amplitudes()) {
        detail::for_each_loss(occ, [&](const Occupation& lost) {
            double factor = 1.0;
            for (std::size_t m = 0; m < modes && factor != 0.0; ++m) {
                const int n = occ[m], l = lost[m];
                const double eta = loss.eta(m);
                factor *= std::sqrt(detail::binomial(n, l) * std::pow(eta, n - l) * std::pow(1.0 - eta, l));
            }
            if (factor == 0.0) return;
            Occupation kept = occ;
            for (std::size_t m = 0; m < modes; ++m) kept[m] -= lost[m];
            branches[lost][kept] += amp * factor;
        });
    }

    std::vector<MixedState::Component> comps;
    double total = 0.0;
    for (auto& [lost, amps] : branches) {
        PureState raw = PureState::unnormalized(state.geometry(), std::move(amps));
        const double w = raw.norm_sq();
        if (w <= 0.0) continue;
        PureState cond = normalize(raw);
        bool merged = false;
        for (auto& c : comps) {
            if (c.state.support_size() == cond.support_size() && std::abs(inner(c.state, cond)) > 1.0 - 1e-13) {
                c.weight += w;
                merged = true;
                break;
            }
        }
        if (!merged) comps.push_back({w, std::move(cond)});
        total += w;
    }
    for (auto& c : comps) c.weight /= total;
    return MixedState(std::move(comps));
}

// Peak-normalized K-photon profile for K below the state's photon number.
inline DepositionProfile lower_order_profile(const PureState& state, int order, const SamplingGrid& grid) {
    const int m = state.geometry().total_photons();
    if (order < 1) throw std::invalid_argument("absorption order must be >= 1");
    if (order >= m) throw std::invalid_argument("lower-order profile needs K < M; use the full-order path");
    return profile(StateSource{MixedState::pure(state), order, 0.0}, grid, Normalization::peak_unity);
}

// ---------------------------------------------------------------------------
// Metrics

namespace detail {

// Linear interpolation of a profile spanning whole periods at any x.
inline double sample_periodic(const DepositionProfile& p, double x, double period) {
    const double span = p.grid.x_max - p.grid.x_min;
    double u = std::fmod(x - p.grid.x_min, period);
    if (u < 0.0) u += period;
    if (u > span) u = std::fmod(u, span);
    const double pos = u / p.grid.step();
    const int i = std::min(static_cast<int>(pos), p.grid.samples - 2);
    const double t = pos - i;
    return p.values[i] * (1.0 - t) + p.values[i + 1] * t;
}

inline int pixel_of(double x, const PixelLayout& layout) {
    double u = std::fmod(x, layout.period);
    if (u < 0.0) u += layout.period;
    int idx = static_cast<int>(std::floor(u / layout.width + 1e-12)) + 1;
    return std::min(idx, layout.count);
}

}  // namespace detail

// Full width at half maximum of the dominant peak, treating the grid as one
// or more whole periods. Crossings are linearly interpolated.
inline double fwhm(const DepositionProfile& p) {
    const std::size_t n = p.values.size() - 1;  // last sample duplicates the first
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (p.values[i] > p.values[peak]) peak = i;
    if (!(p.values[peak] > 0.0)) throw std::invalid_argument("profile is identically zero");
    const double half = 0.5 * p.values[peak];
    const double h = p.grid.step();
    auto at = [&](long long i) { return p.values[static_cast<std::size_t>(((i % (long long)n) + n) % n)]; };

    double right = 0.0, left = 0.0;
    bool found = false;
    for (long long i = peak; i < static_cast<long long>(peak + n); ++i) {
        if (at(i + 1) <= half) {
            right = (i - static_cast<long long>(peak) + (at(i) - half) / (at(i) - at(i + 1))) * h;
            found = true;
            break;
        }
    }
    if (!found) throw std::invalid_argument("profile has no peak: never drops to half maximum");
    found = false;
    for (long long i = peak; i > static_cast<long long>(peak) - static_cast<long long>(n); --i) {
        if (at(i - 1) <= half) {
            left = (static_cast<long long>(peak) - i + (at(i) - half) / (at(i) - at(i - 1))) * h;
            found = true;
            break;
        }
    }
    if (!found) throw std::invalid_argument("profile has no peak: never drops to half maximum");
    return left + right;
}

// Largest deviation from the 0/1 target over pixels whose two neighbours share
// their target status, relative to the peak.
inline double pattern_ripple(const DepositionProfile& p, const PixelLayout& layout, const std::set<int>& targets) {
    const double peak = p.max();
    if (!(peak > 0.0)) throw std::invalid_argument("profile is identically zero");
    std::vector<double> lo(layout.count + 1, peak), hi(layout.count + 1, 0.0);
    for (int i = 0; i + 1 < p.grid.samples; ++i) {
        const int px = detail::pixel_of(p.grid.at(i), layout);
        lo[px] = std::min(lo[px], p.values[i]);
        hi[px] = std::max(hi[px], p.values[i]);
    }
    double ripple = 0.0;
    for (int px = 1; px <= layout.count; ++px) {
        const bool on = targets.count(px) > 0;
        const bool left = targets.count(wrap_pixel(px - 1, layout.count)) > 0;
        const bool right = targets.count(wrap_pixel(px + 1, layout.count)) > 0;
        if (left != on || right != on) continue;
        ripple = std::max(ripple, on ? (peak - lo[px]) / peak : hi[px] / peak);
    }
    return ripple;
}

struct DegradationReport {
    double fwhm = 0.0;                 // wavelength units
    double exposure_penalty = 0.0;     // max rate at non-target pixel centers / peak
    double off_target_max = 0.0;       // max rate anywhere in non-target pixels / peak
    double off_target_fraction = 0.0;  // share of deposited dose landing outside targets
    double ripple = 0.0;               // pattern_ripple
    int top_harmonic = 0;              // highest harmonic present in the reference
    double top_harmonic_relative = 0.0;  // |c_top| / |c_0| of the profile
    bool missing_top_harmonic = false;
};

inline DegradationReport degradation_report(const DepositionProfile& profile, const DepositionProfile& reference,
                                            const PixelLayout& layout, const std::set<int>& targets) {
    if (!(profile.grid == reference.grid)) throw std::invalid_argument("profile and reference need the same grid");
    const double peak = profile.max();
    if (!(peak > 0.0)) throw std::invalid_argument("profile is identically zero");

    DegradationReport r;
    r.fwhm = fwhm(profile);

    for (int px = 1; px <= layout.count; ++px) {
        if (targets.count(px)) continue;
        const double x = pixel_center(layout, {px, Axis::x, false});
        r.exposure_penalty = std::max(r.exposure_penalty, detail::sample_periodic(profile, x, layout.period) / peak);
    }

    double off = 0.0, all = 0.0;
    for (int i = 0; i + 1 < profile.grid.samples; ++i) {
        const double v = profile.values[i];
        all += v;
        if (!targets.count(detail::pixel_of(profile.grid.at(i), layout))) {
            off += v;
            r.off_target_max = std::max(r.off_target_max, v / peak);
        }
    }
    r.off_target_fraction = off / all;
    r.ripple = pattern_ripple(profile, layout, targets);

    const int periods = static_cast<int>(std::round((profile.grid.x_max - profile.grid.x_min) / layout.period));
    const double fundamental = (profile.grid.x_max - profile.grid.x_min) / std::max(periods, 1);
    const int max_h = std::min(256, (profile.grid.samples - 1) / (2 * std::max(periods, 1)) - 1);
    const auto ref_h = fourier_harmonics(reference, fundamental, max_h);
    const auto got_h = fourier_harmonics(profile, fundamental, max_h);
    for (int h = max_h; h >= 0; --h) {
        if (ref_h[h] > 1e-9 * ref_h[0]) {
            r.top_harmonic = h;
            break;
        }
    }
    r.top_harmonic_relative = got_h[r.top_harmonic] / got_h[0];
    r.missing_top_harmonic = r.top_harmonic > 0 && r.top_harmonic_relative < 1e-9;
    return r;
}

inline std::string degradation_record(int order, const DegradationReport& r) {
    std::ostringstream os;
    os << "K=" << order << " fwhm=" << format_real(r.fwhm) << " penalty=" << format_real(r.exposure_penalty)
       << " off_target_max=" << format_real(r.off_target_max)
       << " off_target_fraction=" << format_real(r.off_target_fraction) << " ripple=" << format_real(r.ripple)
       << " top_harmonic=" << r.top_harmonic << " top_harmonic_rel=" << format_real(r.top_harmonic_relative)
       << " missing_top_harmonic=" << (r.missing_top_harmonic ? 1 : 0);
    return os.str();
}

}  // namespace qlitho
