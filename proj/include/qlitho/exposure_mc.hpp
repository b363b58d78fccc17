// Stochastic film exposure from repeated shots of an exposure plan.
//
// Each pixel holds G grains on a uniform lattice. On every shot an unexposed
// grain at x flips with probability q * rate(x); flipped grains stay exposed.
// The shot at which a grain first flips is geometric, so it is drawn once per
// grain from that grain's own counter-based substream. This makes results
// independent of evaluation order and monotone in the shot count and in q for
// a fixed seed.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlitho/parallel.hpp"
#include "qlitho/philox.hpp"
#include "qlitho/planner.hpp"
#include "qlitho/textio.hpp"

namespace qlitho {

struct FilmModel {
    int grains_per_pixel = 100;
    double absorb_prob = 1.0;  // q: flip probability per shot at unit rate

    void validate() const {
        // Lattice spacing width/G must be strictly below the pixel width.
        if (grains_per_pixel < 2) throw std::invalid_argument("film needs at least 2 grains per pixel");
        if (!(absorb_prob > 0.0 && absorb_prob <= 1.0)) throw std::invalid_argument("absorb_prob must lie in (0, 1]");
    }
};

struct ExposureResult {
    std::vector<double> per_pixel_mean;  // over realizations
    std::vector<double> per_pixel_std;   // sample std over realizations, 0 for one realization
    std::vector<std::vector<int>> counts;  // [realization][pixel]
    std::vector<std::uint8_t> grain_exposed;  // realization 0, pixel-major
    long long shots_used = 0;
    std::uint64_t seed = 0;
    int grains_per_pixel = 0;

    bool operator==(const ExposureResult&) const = default;
};

inline double grain_position(const PixelLayout& layout, int pixel, int grain, int grains) {
    return (pixel - 1) * layout.width + (grain + 0.5) * layout.width / grains;
}

// Shot index (1-based) of the first flip for per-shot probability p, or
// max() when p == 0.
inline long long first_flip_shot(double p, double u) {
    if (p <= 0.0) return std::numeric_limits<long long>::max();
    if (p >= 1.0) return 1;
    const double k = std::floor(std::log(u) / std::log1p(-p));
    if (k >= 9.0e18) return std::numeric_limits<long long>::max();
    return static_cast<long long>(k) + 1;
}

inline double grain_uniform(std::uint64_t seed, std::uint64_t grain, std::uint32_t realization) {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(grain), static_cast<std::uint32_t>(grain >> 32),
                                  realization, 0x6c697468u};
    return Philox4x32::open_unit(Philox4x32::generate(ctr, Philox4x32::key_from_seed(seed)));
}

namespace detail {

inline std::vector<double> grain_probabilities(const ExposurePlan& plan, const PixelLayout& layout, const FilmModel& film) {
    const int g = film.grains_per_pixel;
    std::vector<double> p(static_cast<std::size_t>(layout.count) * g);
    for (int px = 1; px <= layout.count; ++px) {
        for (int k = 0; k < g; ++k) {
            const double v = film.absorb_prob * plan.rate(grain_position(layout, px, k, g));
            if (v > 1.0 + 1e-12) throw std::invalid_argument("probability overflow: q * rate exceeds 1");
            p[static_cast<std::size_t>(px - 1) * g + k] = std::min(v, 1.0);
        }
    }
    return p;
}

}  // namespace detail

inline ExposureResult simulate(const ExposurePlan& plan, const FilmModel& film, long long shots, std::uint64_t seed,
                               int realizations = 1) {
    film.validate();
    plan.validate();
    if (shots < 0) throw std::invalid_argument("shot count must be >= 0");
    if (realizations < 1) throw std::invalid_argument("need at least one realization");
    const PixelLayout layout = pixel_layout(plan.geometry);
    const int g = film.grains_per_pixel;
    const auto prob = detail::grain_probabilities(plan, layout, film);

    ExposureResult out;
    out.shots_used = shots;
    out.seed = seed;
    out.grains_per_pixel = g;
    out.counts.assign(realizations, std::vector<int>(layout.count, 0));
    out.grain_exposed.assign(prob.size(), 0);
    parallel_for(static_cast<std::size_t>(layout.count) * realizations, [&](std::size_t job) {
        const auto r = static_cast<std::uint32_t>(job / layout.count);
        const std::size_t px = job % layout.count;
        int count = 0;
        for (int k = 0; k < g; ++k) {
            const std::size_t grain = px * g + k;
            const bool hit = first_flip_shot(prob[grain], grain_uniform(seed, grain, r)) <= shots;
            count += hit;
            if (r == 0) out.grain_exposed[grain] = hit;
        }
        out.counts[r][px] = count;
    }, 1);

    out.per_pixel_mean.assign(layout.count, 0.0);
    out.per_pixel_std.assign(layout.count, 0.0);
    for (int px = 0; px < layout.count; ++px) {
        double sum = 0.0;
        for (int r = 0; r < realizations; ++r) sum += out.counts[r][px];
        const double mean = sum / realizations;
        double ss = 0.0;
        for (int r = 0; r < realizations; ++r) ss += (out.counts[r][px] - mean) * (out.counts[r][px] - mean);
        out.per_pixel_mean[px] = mean;
        out.per_pixel_std[px] = realizations > 1 ? std::sqrt(ss / (realizations - 1)) : 0.0;
    }
    return out;
}

struct ExpectedExposure {
    std::vector<double> mean;
    std::vector<double> variance;
};

// Exact per-pixel mean and variance of the exposed-grain count: a sum of
// independent Bernoulli(1 - (1 - q rate)^S) grains.
inline ExpectedExposure expected_exposure(const ExposurePlan& plan, const FilmModel& film, long long shots) {
    film.validate();
    const PixelLayout layout = pixel_layout(plan.geometry);
    const auto prob = detail::grain_probabilities(plan, layout, film);
    ExpectedExposure e{std::vector<double>(layout.count, 0.0), std::vector<double>(layout.count, 0.0)};
    const int g = film.grains_per_pixel;
    for (int px = 0; px < layout.count; ++px) {
        for (int k = 0; k < g; ++k) {
            const double p = prob[static_cast<std::size_t>(px) * g + k];
            const double h = p >= 1.0 ? (shots > 0 ? 1.0 : 0.0)
                                      : -std::expm1(static_cast<double>(shots) * std::log1p(-p));
            e.mean[px] += h;
            e.variance[px] += h * (1.0 - h);
        }
    }
    return e;
}

// Smallest S with G (1 - (1 - q peak)^S) >= target_mean.
inline long long required_shots(double target_mean, double absorb_prob, double peak_rate, int grains) {
    if (target_mean < 0.0) throw std::invalid_argument("target mean must be >= 0");
    if (!(absorb_prob > 0.0) || !(peak_rate > 0.0) || grains < 1)
        throw std::invalid_argument("absorb_prob, peak_rate and grains must be positive");
    if (target_mean == 0.0) return 0;
    if (target_mean > grains) throw std::invalid_argument("target mean exceeds the grain count; unreachable");
    const double p = absorb_prob * peak_rate;
    if (p > 1.0 + 1e-12) throw std::invalid_argument("probability overflow: q * peak exceeds 1");
    if (p >= 1.0) return 1;
    auto expected = [&](long long s) { return -grains * std::expm1(static_cast<double>(s) * std::log1p(-p)); };
    if (target_mean >= grains) throw std::invalid_argument("target mean equals the grain count; unreachable for q*peak < 1");
    long long s = static_cast<long long>(std::ceil(std::log1p(-target_mean / grains) / std::log1p(-p)));
    s = std::max(s, 1LL);
    while (s > 1 && expected(s - 1) >= target_mean) --s;
    while (expected(s) < target_mean) ++s;
    return s;
}

// Absorption probability q giving an expected count of target_mean in one
// pixel after the given number of shots (bisection on the monotone mean).
inline double tune_absorb_prob(const ExposurePlan& plan, int grains, long long shots, int pixel, double target_mean) {
    double lo = 0.0, hi = 1.0;
    const double peak_rate = [&] {
        const PixelLayout layout = pixel_layout(plan.geometry);
        double m = 0.0;
        for (int px = 1; px <= layout.count; ++px)
            for (int k = 0; k < grains; ++k) m = std::max(m, plan.rate(grain_position(layout, px, k, grains)));
        return m;
    }();
    if (peak_rate > 1.0) hi = 1.0 / peak_rate;
    auto mean_at = [&](double q) { return expected_exposure(plan, {grains, q}, shots).mean.at(pixel - 1); };
    if (mean_at(hi) < target_mean) throw std::invalid_argument("target mean unreachable with this shot count");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= 0.0) break;
        (mean_at(mid) < target_mean ? lo : hi) = mid;
    }
    return hi;
}

inline std::string exposure_to_text(const ExposureResult& r) {
    std::ostringstream os;
    os << "# exposure result\n";
    os << "seed " << r.seed << "\nshots " << r.shots_used << "\ngrains_per_pixel " << r.grains_per_pixel
       << "\nrealizations " << r.counts.size() << '\n';
    os << "pixel,mean,std,counts\n";
    for (std::size_t px = 0; px < r.per_pixel_mean.size(); ++px) {
        os << px + 1 << ',' << format_real(r.per_pixel_mean[px]) << ',' << format_real(r.per_pixel_std[px]) << ',';
        for (std::size_t k = 0; k < r.counts.size(); ++k) os << (k ? " " : "") << r.counts[k][px];
        os << '\n';
    }
    return os.str();
}

// One row of 0/1 characters per pixel, realization 0.
inline std::string grain_bitmap(const ExposureResult& r) {
    std::ostringstream os;
    const std::size_t g = static_cast<std::size_t>(r.grains_per_pixel);
    for (std::size_t i = 0; i < r.grain_exposed.size(); ++i) {
        os << (r.grain_exposed[i] ? '1' : '0');
        if ((i + 1) % g == 0) os << '\n';
    }
    return os.str();
}

}  // namespace qlitho
