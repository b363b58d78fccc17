// Pixel addressing and exposure planning.
//
// A pixel p (1-based) of a geometry is the interval [(p-1) w, p w) with
// w the finest pair's feature size. The phases that put the global maximum of
// the full-order rate on the center x_p are phi_j = 4 pi s_j x_p (mod 2 pi);
// every other pixel center is then a zero of at least one pair kernel.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "qlitho/deposition.hpp"
#include "qlitho/fock.hpp"
#include "qlitho/textio.hpp"

namespace qlitho {

using Rational = boost::rational<long long>;

enum class Axis { x, y };

inline const char* to_string(Axis a) { return a == Axis::x ? "x" : "y"; }

struct PixelAddress {
    int index = 1;
    Axis axis = Axis::x;
    bool intermediate = false;  // half-pixel offset to the right of index

    bool operator==(const PixelAddress&) const = default;
};

struct PixelLayout {
    double width = 0.0;   // wavelength units
    int count = 0;
    double period = 0.0;  // count * width
};

inline PixelLayout pixel_layout(const Geometry& geometry) {
    double width = 0.0;
    for (const auto& p : geometry.pairs()) {
        if (p.photons == 0) continue;
        const double w = 1.0 / (2.0 * (p.photons + 1) * p.scaling);
        width = width == 0.0 ? w : std::min(width, w);
    }
    if (width == 0.0) throw std::invalid_argument("geometry carries no photons");
    const double period = fundamental_period(geometry);
    const double count = period / width;
    if (std::abs(count - std::round(count)) > 1e-9 * count)
        throw std::invalid_argument("fundamental period is not a whole number of pixels");
    return {width, static_cast<int>(std::round(count)), period};
}

// Parameters of the extended-area chain: one N-photon pair plus D single-photon
// doubling pairs.
struct PixelSpec {
    int resolution_photons = 1;
    int doubling_pairs = 0;
    long long pixel_count = 0;
    Rational pixel_width;
    Rational period;
};

inline PixelSpec chain_pixel_spec(int resolution_photons, int total_photons) {
    if (resolution_photons < 1 || total_photons < resolution_photons)
        throw std::invalid_argument("chain needs M >= N >= 1");
    PixelSpec s;
    s.resolution_photons = resolution_photons;
    s.doubling_pairs = total_photons - resolution_photons;
    s.pixel_count = (1LL << s.doubling_pairs) * (resolution_photons + 1);
    s.pixel_width = Rational(1, 2 * (resolution_photons + 1));
    s.period = s.doubling_pairs >= 1 ? Rational(1LL << (s.doubling_pairs - 1)) : Rational(1, 2);
    return s;
}

// Pair 1 carries N photons at grazing incidence; pairs 2..M-N+1 carry one
// photon each at s_i = 2^-(i-1).
inline Geometry chain_geometry(int resolution_photons, int total_photons) {
    if (resolution_photons < 1) throw std::invalid_argument("chain resolution photon number must be >= 1");
    if (total_photons < resolution_photons) throw std::invalid_argument("chain needs M >= N");
    std::vector<ModePair> pairs{{1, resolution_photons, 1.0}};
    for (int i = 2; i <= total_photons - resolution_photons + 1; ++i)
        pairs.push_back({i, 1, std::ldexp(1.0, -(i - 1))});
    return Geometry(std::move(pairs));
}

// Pair 1 grazing with N1 photons, pair 2 at s = 1/(N2+1) with N2 photons.
inline Geometry two_pair_geometry(int n1, int n2) {
    if (n1 < 0 || n2 < 0) throw std::invalid_argument("photon numbers must be >= 0");
    return Geometry({{1, n1, 1.0}, {2, n2, 1.0 / (n2 + 1)}});
}

// Maps any integer onto 1..count (pixel count wraps: count is equivalent to 0).
inline int wrap_pixel(long long p, int count) {
    const long long r = ((p - 1) % count + count) % count;
    return static_cast<int>(r) + 1;
}

inline double pixel_center(const PixelLayout& layout, const PixelAddress& a) {
    if (a.index < 1 || a.index > layout.count)
        throw std::out_of_range("pixel " + std::to_string(a.index) + " outside 1.." + std::to_string(layout.count));
    return (a.index - 0.5) * layout.width + (a.intermediate ? 0.5 * layout.width : 0.0);
}

inline double pixel_center(const Geometry& geometry, const PixelAddress& a) {
    return pixel_center(pixel_layout(geometry), a);
}

inline std::vector<double> phases_for_center(const Geometry& geometry, double x_center) {
    std::vector<double> phi;
    phi.reserve(geometry.pair_count());
    for (const auto& p : geometry.pairs()) {
        double v = std::fmod(4.0 * kPi * p.scaling * x_center, kTwoPi);
        if (v < 0.0) v += kTwoPi;
        phi.push_back(v);
    }
    return phi;
}

inline std::vector<double> phases_for_pixel(const Geometry& geometry, const PixelAddress& a) {
    return phases_for_center(geometry, pixel_center(geometry, a));
}

// Two-pair labels: pixel p = l1 + (N1+1) l2 (mod (N1+1)(N2+1)).
struct EllIndices {
    int l1 = 1;
    int l2 = 1;
    bool operator==(const EllIndices&) const = default;
};

inline EllIndices ell_indices(int pixel, int n1, int n2) {
    const int m1 = n1 + 1;
    const int count = m1 * (n2 + 1);
    const int p = wrap_pixel(pixel, count);
    const int l1 = (p - 1) % m1 + 1;
    const int q = (p - l1) / m1;  // l2 = q (mod N2+1), taken in 1..N2+1
    const int l2 = wrap_pixel(q, n2 + 1);
    return {l1, l2};
}

inline int pixel_from_ell(const EllIndices& ell, int n1, int n2) {
    if (ell.l1 < 1 || ell.l1 > n1 + 1 || ell.l2 < 1 || ell.l2 > n2 + 1)
        throw std::out_of_range("ell indices outside their ranges");
    return wrap_pixel(ell.l1 + static_cast<long long>(n1 + 1) * ell.l2, (n1 + 1) * (n2 + 1));
}

// Literal two-pair phase rule: pair 1 shifted by 2 pi (l1 - 1/2)/(N1+1), pair 2
// by 2 pi [l2 + (l1 - 1/2)/(N1+1)]/(N2+1). Only meaningful for
// two_pair_geometry-style layouts.
inline std::vector<double> phases_for_ell(const Geometry& geometry, const EllIndices& ell) {
    if (geometry.pair_count() != 2) throw std::invalid_argument("ell labels need a two-pair geometry");
    const int n1 = geometry.pairs()[0].photons;
    const int n2 = geometry.pairs()[1].photons;
    const double shift1 = (ell.l1 - 0.5) / (n1 + 1);
    return {std::fmod(kTwoPi * shift1, kTwoPi), std::fmod(kTwoPi * (ell.l2 + shift1) / (n2 + 1), kTwoPi)};
}

// ---------------------------------------------------------------------------
// Plans

struct PixelTarget {
    PixelAddress address;
    double weight = 1.0;
};

struct PlanEntry {
    double weight = 1.0;
    std::vector<double> phases;
    std::optional<PixelAddress> target;
};

struct ExposurePlan {
    Geometry geometry;
    std::vector<PlanEntry> entries;

    void validate() const {
        if (entries.empty()) throw std::invalid_argument("exposure plan has no entries");
        double total = 0.0;
        for (const auto& e : entries) {
            if (!(e.weight > 0.0)) throw std::invalid_argument("plan weights must be positive");
            if (e.phases.size() != geometry.pair_count())
                throw std::invalid_argument("plan entry needs one phase per pair");
            total += e.weight;
        }
        if (std::abs(total - 1.0) > kNormTolerance) throw std::invalid_argument("plan weights must sum to 1");
    }

    std::vector<PhaseSetting> settings() const {
        std::vector<PhaseSetting> s;
        s.reserve(entries.size());
        for (const auto& e : entries) s.push_back({e.weight, e.phases});
        return s;
    }

    PhaseSource source() const { return {geometry, settings()}; }

    double rate(double x) const {
        double r = 0.0;
        for (const auto& e : entries) r += e.weight * closed_form_rate(geometry, e.phases, x);
        return r;
    }

    std::vector<PixelAddress> targets() const {
        std::vector<PixelAddress> t;
        for (const auto& e : entries)
            if (e.target) t.push_back(*e.target);
        return t;
    }
};

inline ExposurePlan plan_pattern(const Geometry& geometry, std::span<const PixelTarget> targets) {
    if (targets.empty()) throw std::invalid_argument("pattern has no target pixels");
    const PixelLayout layout = pixel_layout(geometry);
    double total = 0.0;
    for (const auto& t : targets) {
        if (!(t.weight > 0.0)) throw std::invalid_argument("target weights must be positive");
        total += t.weight;
    }
    ExposurePlan plan{geometry, {}};
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k)
            if (targets[k].address == targets[i].address)
                throw std::invalid_argument("duplicate pixel target " + std::to_string(targets[i].address.index));
        const double x = pixel_center(layout, targets[i].address);
        plan.entries.push_back({targets[i].weight / total, phases_for_center(geometry, x), targets[i].address});
    }
    return plan;
}

inline ExposurePlan plan_pattern(const Geometry& geometry, std::span<const int> pixels) {
    std::vector<PixelTarget> t;
    for (int p : pixels) t.push_back({{p, Axis::x, false}, 1.0});
    return plan_pattern(geometry, t);
}

inline ExposurePlan plan_from_phases(const Geometry& geometry, std::vector<PhaseSetting> settings) {
    ExposurePlan plan{geometry, {}};
    double total = 0.0;
    for (const auto& s : settings) total += s.weight;
    for (auto& s : settings) plan.entries.push_back({s.weight / total, std::move(s.phases), std::nullopt});
    plan.validate();
    return plan;
}

// Complement plan: every regular pixel not targeted by the plan, equal weights.
inline ExposurePlan negative_plan(const ExposurePlan& plan) {
    const PixelLayout layout = pixel_layout(plan.geometry);
    std::set<int> used;
    Axis axis = Axis::x;
    for (const auto& e : plan.entries) {
        if (!e.target) throw std::invalid_argument("negative plan needs pixel-addressed entries");
        if (e.target->intermediate) throw std::invalid_argument("negative plan is undefined for intermediate pixels");
        used.insert(e.target->index);
        axis = e.target->axis;
    }
    std::vector<int> rest;
    for (int p = 1; p <= layout.count; ++p)
        if (!used.count(p)) rest.push_back(p);
    if (rest.empty()) throw std::invalid_argument("plan covers every pixel; the negative is empty");
    std::vector<PixelTarget> t;
    for (int p : rest) t.push_back({{p, axis, false}, 1.0});
    return plan_pattern(plan.geometry, t);
}

// Serialized form (phases in units of 2 pi):
//   plan
//   pair <index> <photons> <scaling>
//   entry <weight> | <phi_1/2pi> ... | target=<p> axis=<x|y> intermediate=<0|1> [ell=<l1>,<l2>]
inline std::string plan_to_text(const ExposurePlan& plan) {
    std::ostringstream os;
    os << "plan\n";
    for (const auto& p : plan.geometry.pairs())
        os << "pair " << p.index << ' ' << p.photons << ' ' << format_real(p.scaling) << '\n';
    const auto& pairs = plan.geometry.pairs();
    const bool labelled = pairs.size() == 2 && std::abs(pairs[0].scaling - 1.0) < 1e-15 &&
                          std::abs(pairs[1].scaling * (pairs[1].photons + 1) - 1.0) < 1e-12;
    for (const auto& e : plan.entries) {
        os << "entry " << format_real(e.weight) << " |";
        for (double phi : e.phases) os << ' ' << format_real(phi / kTwoPi);
        os << " |";
        if (e.target) {
            os << " target=" << e.target->index << " axis=" << to_string(e.target->axis)
               << " intermediate=" << (e.target->intermediate ? 1 : 0);
            if (labelled && !e.target->intermediate) {
                const auto ell = ell_indices(e.target->index, pairs[0].photons, pairs[1].photons);
                os << " ell=" << ell.l1 << ',' << ell.l2;
            }
        }
        os << '\n';
    }
    return os.str();
}

inline ExposurePlan plan_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::vector<ModePair> pairs;
    std::vector<PlanEntry> entries;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw std::invalid_argument("plan text line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#' || line == "plan") continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "pair") {
            ModePair p;
            if (!(ls >> p.index >> p.photons >> p.scaling)) fail("malformed pair row");
            pairs.push_back(p);
        } else if (tag == "entry") {
            const auto a = line.find('|');
            const auto b = a == std::string::npos ? a : line.find('|', a + 1);
            if (b == std::string::npos) fail("entry row needs two '|' separators");
            PlanEntry e;
            std::istringstream ws(line.substr(5, a - 5));
            if (!(ws >> e.weight)) fail("missing weight");
            std::istringstream ps(line.substr(a + 1, b - a - 1));
            double turns = 0.0;
            while (ps >> turns) e.phases.push_back(turns * kTwoPi);
            std::istringstream ts(line.substr(b + 1));
            std::string kv;
            PixelAddress addr;
            bool has_target = false;
            while (ts >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) fail("expected key=value, got '" + kv + "'");
                const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
                if (key == "target") {
                    addr.index = std::stoi(val);
                    has_target = true;
                } else if (key == "axis") {
                    if (val != "x" && val != "y") fail("axis must be x or y");
                    addr.axis = val == "x" ? Axis::x : Axis::y;
                } else if (key == "intermediate") {
                    addr.intermediate = val == "1";
                } else if (key != "ell") {
                    fail("unknown entry field '" + key + "'");
                }
            }
            if (has_target) e.target = addr;
            entries.push_back(std::move(e));
        } else {
            fail("unknown row '" + tag + "'");
        }
    }
    ExposurePlan plan{Geometry(std::move(pairs)), std::move(entries)};
    plan.validate();
    return plan;
}

// ---------------------------------------------------------------------------
// Two axes

struct PixelTarget2D {
    int x = 1;
    int y = 1;
    bool intermediate = false;  // centered on the corner shared with (x+1, y+1)
    double weight = 1.0;

    bool operator==(const PixelTarget2D&) const = default;
    auto operator<=>(const PixelTarget2D&) const = default;
};

struct TwoAxisEntry {
    double weight = 1.0;
    std::vector<double> phases_x;
    std::vector<double> phases_y;
    PixelTarget2D target;
};

struct TwoAxisPlan {
    Geometry geometry_x;
    Geometry geometry_y;
    std::vector<TwoAxisEntry> entries;
};

inline TwoAxisPlan plan_pattern_2d(const Geometry& gx, const Geometry& gy, std::span<const PixelTarget2D> targets) {
    if (targets.empty()) throw std::invalid_argument("pattern has no target pixels");
    double total = 0.0;
    for (const auto& t : targets) {
        if (!(t.weight > 0.0)) throw std::invalid_argument("target weights must be positive");
        total += t.weight;
    }
    TwoAxisPlan plan{gx, gy, {}};
    for (const auto& t : targets) {
        auto px = phases_for_pixel(gx, {t.x, Axis::x, t.intermediate});
        auto py = phases_for_pixel(gy, {t.y, Axis::y, t.intermediate});
        plan.entries.push_back({t.weight / total, std::move(px), std::move(py), t});
    }
    return plan;
}

// Rows of 0/1 cells; row r is Y pixel r+1, column c is X pixel c+1.
inline std::vector<PixelTarget2D> targets_from_bitmap(std::span<const std::string> rows) {
    std::vector<PixelTarget2D> t;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const char ch = rows[r][c];
            if (ch == '1') t.push_back({static_cast<int>(c) + 1, static_cast<int>(r) + 1, false, 1.0});
            else if (ch != '0') throw std::invalid_argument("bitmap cells must be 0 or 1");
        }
    }
    return t;
}

// Adds an intermediate pixel on the shared corner of every diagonally adjacent
// pair of regular targets, filling the dip along diagonal lines.
inline std::vector<PixelTarget2D> diagonal_fill(std::span<const PixelTarget2D> targets) {
    std::set<std::pair<int, int>> on;
    for (const auto& t : targets)
        if (!t.intermediate) on.insert({t.x, t.y});
    std::set<PixelTarget2D> out(targets.begin(), targets.end());
    for (const auto& [x, y] : on) {
        if (on.count({x + 1, y + 1})) out.insert({x, y, true, 1.0});
        if (on.count({x + 1, y - 1})) out.insert({x, y - 1, true, 1.0});
    }
    return {out.begin(), out.end()};
}

inline Profile2D profile_2d(const TwoAxisPlan& plan, const SamplingGrid& gx, const SamplingGrid& gy, Normalization mode) {
    if (mode == Normalization::peak_unity) throw std::invalid_argument("2D plan profiles support raw or pixelsum");
    gx.validate();
    gy.validate();
    Profile2D out{gx, gy, std::vector<double>(static_cast<std::size_t>(gx.samples) * gy.samples, 0.0), mode};
    const double scale = mode == Normalization::pixel_sum_unity ? static_cast<double>(plan.entries.size()) : 1.0;
    for (const auto& e : plan.entries) {
        std::vector<double> rx(gx.samples), ry(gy.samples);
        for (int i = 0; i < gx.samples; ++i) rx[i] = closed_form_rate(plan.geometry_x, e.phases_x, gx.at(i));
        for (int j = 0; j < gy.samples; ++j) ry[j] = closed_form_rate(plan.geometry_y, e.phases_y, gy.at(j));
        for (int i = 0; i < gx.samples; ++i)
            for (int j = 0; j < gy.samples; ++j)
                out.values[static_cast<std::size_t>(i) * gy.samples + j] += scale * e.weight * rx[i] * ry[j];
    }
    return out;
}

inline std::string plan2d_to_text(const TwoAxisPlan& plan) {
    std::ostringstream os;
    os << "plan2d\n";
    for (const auto& p : plan.geometry_x.pairs())
        os << "pair_x " << p.index << ' ' << p.photons << ' ' << format_real(p.scaling) << '\n';
    for (const auto& p : plan.geometry_y.pairs())
        os << "pair_y " << p.index << ' ' << p.photons << ' ' << format_real(p.scaling) << '\n';
    for (const auto& e : plan.entries) {
        os << "entry " << format_real(e.weight) << " |";
        for (double phi : e.phases_x) os << ' ' << format_real(phi / kTwoPi);
        os << " |";
        for (double phi : e.phases_y) os << ' ' << format_real(phi / kTwoPi);
        os << " | target=" << e.target.x << ',' << e.target.y << " intermediate=" << (e.target.intermediate ? 1 : 0)
           << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Photon partitions between two pairs

struct PartitionRow {
    int n1 = 0;
    int n2 = 0;
    long long pixels = 0;
    Rational feature_size;  // wavelength units
    Rational periodicity;   // wavelength units
};

// Rows for N1 = n, N2 = 2N - n, n = 2N down to 0.
inline std::vector<PartitionRow> partition_table(int half_photons) {
    if (half_photons < 1) throw std::invalid_argument("partition table needs N >= 1");
    const int total = 2 * half_photons;
    std::vector<PartitionRow> rows;
    for (int n = total; n >= 0; --n) {
        PartitionRow r;
        r.n1 = n;
        r.n2 = total - n;
        r.pixels = static_cast<long long>(n + 1) * (total - n + 1);
        r.feature_size = Rational(1, 2 * (n + 1));
        r.periodicity = Rational(total - n + 1, 2);
        rows.push_back(r);
    }
    return rows;
}

inline std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace qlitho
