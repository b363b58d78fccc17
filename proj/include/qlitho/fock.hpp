// Multi-mode Fock-space states for counter-propagating beam pairs.
//
// A state lives on a Geometry: an ordered list of mode pairs, each pair j
// owning two modes (+j, -j). Occupation vectors store counts as
// [n_{+1}, n_{-1}, n_{+2}, n_{-2}, ...] in geometry order. Amplitudes are kept
// in a sparse ordered map so chain states with many single-photon pairs stay
// small.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qlitho/textio.hpp"

namespace qlitho {

using complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kNormTolerance = 1e-12;

struct ModePair {
    int index = 1;          // pair label j >= 1
    int photons = 0;        // N_j
    double scaling = 1.0;   // s_j = sin(theta_j), 1 is grazing incidence

    void validate() const {
        if (index < 1) throw std::invalid_argument("mode pair index must be >= 1");
        if (photons < 0) throw std::invalid_argument("mode pair photon number must be >= 0");
        if (!(scaling > 0.0 && scaling <= 1.0))
            throw std::invalid_argument("mode pair scaling must lie in (0, 1]");
    }

    bool operator==(const ModePair&) const = default;
};

class Geometry {
public:
    Geometry() = default;

    explicit Geometry(std::vector<ModePair> pairs) : pairs_(std::move(pairs)) {
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            pairs_[i].validate();
            for (std::size_t k = 0; k < i; ++k)
                if (pairs_[k].index == pairs_[i].index)
                    throw std::invalid_argument("duplicate mode pair index " +
                                                std::to_string(pairs_[i].index));
        }
    }

    const std::vector<ModePair>& pairs() const { return pairs_; }
    std::size_t pair_count() const { return pairs_.size(); }
    std::size_t mode_count() const { return 2 * pairs_.size(); }

    int total_photons() const {
        int m = 0;
        for (const auto& p : pairs_) m += p.photons;
        return m;
    }

    bool contains(int pair_index) const {
        return std::any_of(pairs_.begin(), pairs_.end(),
                           [&](const ModePair& p) { return p.index == pair_index; });
    }

    std::size_t position_of(int pair_index) const {
        for (std::size_t i = 0; i < pairs_.size(); ++i)
            if (pairs_[i].index == pair_index) return i;
        throw std::out_of_range("unknown mode pair index " + std::to_string(pair_index));
    }

    Geometry concat(const Geometry& other) const {
        for (const auto& p : other.pairs_)
            if (contains(p.index))
                throw std::invalid_argument("tensor product of states sharing pair index " +
                                            std::to_string(p.index));
        std::vector<ModePair> all = pairs_;
        all.insert(all.end(), other.pairs_.begin(), other.pairs_.end());
        return Geometry(std::move(all));
    }

    bool operator==(const Geometry&) const = default;

private:
    std::vector<ModePair> pairs_;
};

using Occupation = std::vector<std::uint16_t>;
using AmplitudeMap = std::map<Occupation, complex>;

class PureState {
public:
    PureState() = default;

    // Rejects states whose squared norm differs from 1 by more than kNormTolerance.
    static PureState normalized(Geometry geometry, AmplitudeMap amplitudes) {
        PureState s(std::move(geometry), std::move(amplitudes), true);
        const double n = s.norm_sq();
        if (std::abs(n - 1.0) > kNormTolerance)
            throw std::invalid_argument("state is not normalized: norm^2 = " + format_real(n));
        return s;
    }

    static PureState unnormalized(Geometry geometry, AmplitudeMap amplitudes) {
        return PureState(std::move(geometry), std::move(amplitudes), false);
    }

    static PureState vacuum(Geometry geometry) {
        Occupation zero(geometry.mode_count(), 0);
        AmplitudeMap amps{{zero, complex{1.0, 0.0}}};
        return PureState(std::move(geometry), std::move(amps), true);
    }

    const Geometry& geometry() const { return geometry_; }
    const AmplitudeMap& amplitudes() const { return amplitudes_; }
    bool is_normalized() const { return normalized_; }
    std::size_t support_size() const { return amplitudes_.size(); }

    complex amplitude(const Occupation& occ) const {
        auto it = amplitudes_.find(occ);
        return it == amplitudes_.end() ? complex{} : it->second;
    }

    double norm_sq() const {
        double n = 0.0;
        for (const auto& [occ, a] : amplitudes_) n += std::norm(a);
        return n;
    }

private:
    PureState(Geometry geometry, AmplitudeMap amplitudes, bool normalized)
        : geometry_(std::move(geometry)), amplitudes_(std::move(amplitudes)), normalized_(normalized) {
        const std::size_t modes = geometry_.mode_count();
        for (const auto& [occ, a] : amplitudes_)
            if (occ.size() != modes)
                throw std::invalid_argument("occupation vector length does not match mode count");
    }

    Geometry geometry_;
    AmplitudeMap amplitudes_;
    bool normalized_ = false;
};

inline double norm_sq(const PureState& state) { return state.norm_sq(); }

// Weighted ensemble of normalized pure states.
class MixedState {
public:
    struct Component {
        double weight;
        PureState state;
    };

    MixedState() = default;

    explicit MixedState(std::vector<Component> components) : components_(std::move(components)) {
        if (components_.empty()) throw std::invalid_argument("mixed state needs at least one component");
        double total = 0.0;
        for (const auto& c : components_) {
            if (!(c.weight >= 0.0)) throw std::invalid_argument("mixture weights must be non-negative");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > kNormTolerance)
            throw std::invalid_argument("mixture weights sum to " + format_real(total) + ", not 1");
    }

    static MixedState pure(PureState state) { return MixedState({{1.0, std::move(state)}}); }

    const std::vector<Component>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }

private:
    std::vector<Component> components_;
};

// Two-mode state sum_n sqrt(n!(N-n)!) |n, N-n> / sqrt(sum_n n!(N-n)!).
// n!(N-n)! = N!/C(N,n), so weights are proportional to 1/C(N,n).
inline PureState reciprocal_binomial(int photons, double scaling = 1.0, int pair_index = 1) {
    if (photons < 0) throw std::invalid_argument("photon number must be >= 0");
    Geometry g({ModePair{pair_index, photons, scaling}});
    std::vector<double> w(photons + 1);
    double binom = 1.0;
    double total = 0.0;
    for (int n = 0; n <= photons; ++n) {
        w[n] = 1.0 / binom;
        total += w[n];
        binom = binom * (photons - n) / (n + 1);
    }
    AmplitudeMap amps;
    for (int n = 0; n <= photons; ++n) {
        Occupation occ{static_cast<std::uint16_t>(n), static_cast<std::uint16_t>(photons - n)};
        amps.emplace(std::move(occ), complex{std::sqrt(w[n] / total), 0.0});
    }
    return PureState::normalized(std::move(g), std::move(amps));
}

namespace detail {

template <typename PhaseOf>
PureState map_phases(const PureState& state, PhaseOf&& phase_of) {
    AmplitudeMap out;
    for (const auto& [occ, a] : state.amplitudes()) {
        const double phi = phase_of(occ);
        out.emplace_hint(out.end(), occ, a * std::polar(1.0, phi));
    }
    if (state.is_normalized()) return PureState::normalized(state.geometry(), std::move(out));
    return PureState::unnormalized(state.geometry(), std::move(out));
}

}  // namespace detail

// Free propagation to film position x (wavelength units), symmetric convention:
// phase 2 pi s_j x (n_{+j} - n_{-j}) per pair.
inline PureState propagate(const PureState& state, double x) {
    const auto& pairs = state.geometry().pairs();
    std::vector<double> k(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) k[j] = kTwoPi * pairs[j].scaling * x;
    return detail::map_phases(state, [&](const Occupation& occ) {
        double phi = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j)
            phi += k[j] * (static_cast<double>(occ[2 * j]) - static_cast<double>(occ[2 * j + 1]));
        return phi;
    });
}

// Relative phase exp(i phi n_{+j}) on pair j.
inline PureState apply_pair_phase(const PureState& state, int pair_index, double phi) {
    const std::size_t pos = state.geometry().position_of(pair_index);
    return detail::map_phases(state, [&](const Occupation& occ) { return phi * occ[2 * pos]; });
}

inline PureState tensor(const PureState& a, const PureState& b) {
    Geometry g = a.geometry().concat(b.geometry());
    AmplitudeMap out;
    for (const auto& [oa, va] : a.amplitudes()) {
        for (const auto& [ob, vb] : b.amplitudes()) {
            Occupation occ = oa;
            occ.insert(occ.end(), ob.begin(), ob.end());
            out.emplace(std::move(occ), va * vb);
        }
    }
    if (a.is_normalized() && b.is_normalized()) return PureState::normalized(std::move(g), std::move(out));
    return PureState::unnormalized(std::move(g), std::move(out));
}

// One application of e = (1/sqrt(W)) sum_m a_m.
inline AmplitudeMap annihilate_sum(const AmplitudeMap& in, std::size_t modes) {
    const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(modes));
    AmplitudeMap out;
    for (const auto& [occ, a] : in) {
        for (std::size_t m = 0; m < modes; ++m) {
            const std::uint16_t n = occ[m];
            if (n == 0) continue;
            Occupation lowered = occ;
            --lowered[m];
            out[std::move(lowered)] += a * (std::sqrt(static_cast<double>(n)) * inv_sqrt_w);
        }
    }
    return out;
}

// e^K |psi>. The result is unnormalized; its squared norm is the K-photon rate.
inline PureState apply_absorption(const PureState& state, int order) {
    if (order < 1) throw std::invalid_argument("absorption order must be >= 1");
    const std::size_t modes = state.geometry().mode_count();
    AmplitudeMap amps = state.amplitudes();
    for (int k = 0; k < order && !amps.empty(); ++k) amps = annihilate_sum(amps, modes);
    return PureState::unnormalized(state.geometry(), std::move(amps));
}

inline PureState scaled(const PureState& s, complex factor) {
    AmplitudeMap out;
    for (const auto& [occ, a] : s.amplitudes()) out.emplace_hint(out.end(), occ, a * factor);
    return PureState::unnormalized(s.geometry(), std::move(out));
}

inline PureState added(const PureState& a, const PureState& b) {
    if (!(a.geometry() == b.geometry()))
        throw std::invalid_argument("cannot add states on different geometries");
    AmplitudeMap out = a.amplitudes();
    for (const auto& [occ, v] : b.amplitudes()) out[occ] += v;
    return PureState::unnormalized(a.geometry(), std::move(out));
}

inline PureState normalize(const PureState& s) {
    const double n = s.norm_sq();
    if (n <= 0.0) throw std::invalid_argument("cannot normalize the zero vector");
    AmplitudeMap out;
    const double inv = 1.0 / std::sqrt(n);
    for (const auto& [occ, a] : s.amplitudes()) out.emplace_hint(out.end(), occ, a * inv);
    return PureState::normalized(s.geometry(), std::move(out));
}

// |<a|b>| over the union of supports.
inline complex inner(const PureState& a, const PureState& b) {
    complex acc{};
    for (const auto& [occ, va] : a.amplitudes()) acc += std::conj(va) * b.amplitude(occ);
    return acc;
}

// Canonical text form used for fixtures:
//   pair <index> <photons> <scaling>
//   normalized <0|1>
//   <n_+1> <n_-1> ... | <re> <im>
// rows sorted by occupation vector.
inline std::string to_text(const PureState& s) {
    std::ostringstream os;
    for (const auto& p : s.geometry().pairs())
        os << "pair " << p.index << ' ' << p.photons << ' ' << format_real(p.scaling) << '\n';
    os << "normalized " << (s.is_normalized() ? 1 : 0) << '\n';
    for (const auto& [occ, a] : s.amplitudes()) {
        for (auto n : occ) os << n << ' ';
        os << "| " << format_real(a.real()) << ' ' << format_real(a.imag()) << '\n';
    }
    return os.str();
}

inline PureState state_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::vector<ModePair> pairs;
    AmplitudeMap amps;
    bool normalized = true;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        auto fail = [&](const std::string& what) {
            throw std::invalid_argument("state text line " + std::to_string(line_no) + ": " + what);
        };
        if (line.rfind("pair ", 0) == 0) {
            std::string tag;
            ModePair p;
            if (!(ls >> tag >> p.index >> p.photons >> p.scaling)) fail("malformed pair row");
            pairs.push_back(p);
        } else if (line.rfind("normalized ", 0) == 0) {
            std::string tag;
            int flag = 0;
            if (!(ls >> tag >> flag)) fail("malformed normalized row");
            normalized = flag != 0;
        } else {
            const auto bar = line.find('|');
            if (bar == std::string::npos) fail("amplitude row without '|'");
            std::istringstream occs(line.substr(0, bar));
            std::istringstream vals(line.substr(bar + 1));
            Occupation occ;
            int n = 0;
            while (occs >> n) {
                if (n < 0) fail("negative occupation");
                occ.push_back(static_cast<std::uint16_t>(n));
            }
            double re = 0.0, im = 0.0;
            if (!(vals >> re >> im)) fail("malformed amplitude");
            amps[std::move(occ)] = complex{re, im};
        }
    }
    Geometry g(std::move(pairs));
    if (normalized) return PureState::normalized(std::move(g), std::move(amps));
    return PureState::unnormalized(std::move(g), std::move(amps));
}

}  // namespace qlitho
