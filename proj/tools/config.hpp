// Run configuration: a sectioned key = value text format.
//
//   [geometry]            pair = <N> scaling=<s|1/k> | pair = <N> angle_deg=<deg> | chain = <N> <M>
//   [geometry_y]          same keys, Y axis of a 2D product pattern
//   [plan]                target = <p>[,<py>] [weight=<w>] [intermediate]
//                         phases = <t1> <t2> ... [weight=<w>]   (turns of 2 pi)
//                         pattern = <path>
//   [grid] [grid_y]       x_min, x_max, samples
//   [absorption]          order
//   [loss]                transmission
//   [film]                grains, absorb_prob, target_mean, shots, seed, realizations
//   [output]              dir, normalize, engine

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlitho/fock.hpp"

namespace qlitho::cli {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& what)
        : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct PairSpec {
    int photons = 0;
    double scaling = 1.0;
    bool operator==(const PairSpec&) const = default;
};

struct ChainSpec {
    int resolution_photons = 1;
    int total_photons = 1;
    bool operator==(const ChainSpec&) const = default;
};

struct GeometrySpec {
    std::vector<PairSpec> pairs;
    std::optional<ChainSpec> chain;

    bool empty() const { return pairs.empty() && !chain; }
    Geometry build() const;
    bool operator==(const GeometrySpec&) const = default;
};

struct PlanItem {
    std::optional<int> pixel;
    std::optional<int> pixel_y;
    bool intermediate = false;
    std::vector<double> turns;  // explicit phases, units of 2 pi
    double weight = 1.0;
    bool operator==(const PlanItem&) const = default;
};

struct GridSpec {
    std::optional<double> x_min;
    std::optional<double> x_max;
    std::optional<int> samples;
    bool operator==(const GridSpec&) const = default;
};

struct FilmSpec {
    std::optional<int> grains;
    std::optional<double> absorb_prob;
    std::optional<double> target_mean;
    std::optional<long long> shots;
    std::optional<std::uint64_t> seed;
    std::optional<int> realizations;
    bool operator==(const FilmSpec&) const = default;
};

struct OutputSpec {
    std::optional<std::string> dir;
    std::optional<std::string> normalize;
    std::optional<std::string> engine;
    bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
    GeometrySpec geometry;
    GeometrySpec geometry_y;
    std::vector<PlanItem> plan;
    std::optional<std::string> pattern;
    GridSpec grid;
    GridSpec grid_y;
    std::optional<int> order;
    std::optional<double> transmission;
    FilmSpec film;
    OutputSpec output;

    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

// Accepts a decimal or a fraction "a/b".
double parse_fraction(const std::string& text);

}  // namespace qlitho::cli
