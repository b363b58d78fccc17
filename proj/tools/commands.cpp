#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "config.hpp"
#include "qlitho/deposition.hpp"
#include "qlitho/exposure_mc.hpp"
#include "qlitho/imperfections.hpp"
#include "qlitho/planner.hpp"
#include "qlitho/textio.hpp"

namespace fs = std::filesystem;

namespace qlitho::cli {

namespace {

// Failures of a requested computation, as opposed to bad input.
struct ComputationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::string out_dir;
    std::string engine;
    std::string normalize;
    std::optional<std::uint64_t> seed;
    bool negative = false;
    bool fill_diagonals = false;
    std::string pattern;
    std::string suite = "all";
    int table_n = 0;
};

struct Context {
    RunConfig config;
    Options opt;
    std::ostream& out;

    fs::path out_dir() const {
        if (!opt.out_dir.empty()) return opt.out_dir;
        if (config.output.dir) return *config.output.dir;
        if (const char* env = std::getenv("QLITHO_OUT_DIR"); env && *env) return env;
        return ".";
    }
    std::string engine() const {
        if (!opt.engine.empty()) return opt.engine;
        return config.output.engine.value_or("closed");
    }
    Normalization normalization() const {
        if (!opt.normalize.empty()) return parse_normalization(opt.normalize);
        return parse_normalization(config.output.normalize.value_or("peak"));
    }
    std::uint64_t seed() const {
        if (opt.seed) return *opt.seed;
        return config.film.seed.value_or(1);
    }

    std::string header(const std::string& command) const {
        RunConfig resolved = config;
        resolved.output.dir = out_dir().string();
        resolved.output.engine = engine();
        resolved.output.normalize = std::string(to_string(normalization()));
        resolved.film.seed = seed();
        std::ostringstream os;
        os << "# qlitho " << command << '\n';
        std::istringstream is(serialize_config(resolved));
        for (std::string line; std::getline(is, line);) os << "# " << line << '\n';
        return os.str();
    }

    void write(const std::string& name, const std::string& command, const std::string& body) const {
        const fs::path path = out_dir() / name;
        write_file_atomic(path, header(command) + body);
        out << "wrote " << path.string() << '\n';
    }
};

SamplingGrid resolve_grid(const GridSpec& spec, const Geometry& g) {
    SamplingGrid grid;
    grid.x_min = spec.x_min.value_or(0.0);
    grid.x_max = spec.x_max.value_or(grid.x_min + fundamental_period(g));
    grid.samples = spec.samples.value_or(2048);
    grid.validate();
    return grid;
}

// ---------------------------------------------------------------------------
// Patterns

struct Targets {
    std::vector<PixelTarget> one_axis;
    std::vector<PixelTarget2D> two_axis;
    std::vector<PhaseSetting> explicit_phases;

    bool two_dimensional() const { return !two_axis.empty(); }
    bool empty() const { return one_axis.empty() && two_axis.empty() && explicit_phases.empty(); }
};

void read_pattern_file(const std::string& path, Targets& t) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot read pattern file " + path);
    std::vector<std::string> rows;
    bool bitmap = false;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        line = line.substr(0, line.find('#'));
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream is(line);
        std::string w;
        std::vector<std::string> ws;
        while (is >> w) ws.push_back(w);
        if (ws.empty()) continue;
        if (ws.size() == 1 && ws[0] == "bitmap") {
            if (bitmap || !t.one_axis.empty()) throw ConfigError(0, path + ":" + std::to_string(line_no) + ": misplaced 'bitmap'");
            bitmap = true;
            continue;
        }
        if (bitmap) {
            if (ws.size() != 1) throw ConfigError(0, path + ":" + std::to_string(line_no) + ": bitmap rows are single 0/1 words");
            rows.push_back(ws[0]);
            continue;
        }
        for (const auto& v : ws) {
            try {
                std::size_t pos = 0;
                const int p = std::stoi(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                t.one_axis.push_back({{p, Axis::x, false}, 1.0});
            } catch (const std::exception&) {
                throw ConfigError(0, path + ":" + std::to_string(line_no) + ": not a pixel number: '" + v + "'");
            }
        }
    }
    if (bitmap) {
        try {
            auto cells = targets_from_bitmap(rows);
            t.two_axis.insert(t.two_axis.end(), cells.begin(), cells.end());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(0, path + ": " + e.what());
        }
    }
}

Targets collect_targets(const Context& ctx) {
    Targets t;
    for (const auto& item : ctx.config.plan) {
        if (item.pixel && item.pixel_y)
            t.two_axis.push_back({*item.pixel, *item.pixel_y, item.intermediate, item.weight});
        else if (item.pixel)
            t.one_axis.push_back({{*item.pixel, Axis::x, item.intermediate}, item.weight});
        else
            t.explicit_phases.push_back({item.weight, [&] {
                                             std::vector<double> phi;
                                             for (double turns : item.turns) phi.push_back(turns * kTwoPi);
                                             return phi;
                                         }()});
    }
    // A pattern named in the config is relative to the config file; --pattern is relative to the cwd.
    std::string pattern = ctx.opt.pattern;
    if (pattern.empty() && ctx.config.pattern) {
        fs::path p = *ctx.config.pattern;
        if (p.is_relative() && !ctx.opt.config_path.empty()) p = fs::path(ctx.opt.config_path).parent_path() / p;
        pattern = p.string();
    }
    if (!pattern.empty()) read_pattern_file(pattern, t);
    const int kinds = !t.one_axis.empty() + !t.two_axis.empty() + !t.explicit_phases.empty();
    if (kinds > 1) throw ConfigError(0, "plan mixes 1D targets, 2D targets and explicit phases");
    return t;
}

void check_feasible(std::size_t distinct, const PixelLayout& layout) {
    if (distinct > static_cast<std::size_t>(layout.count))
        throw std::invalid_argument("infeasible pattern: " + std::to_string(distinct) + " targets but only " +
                                    std::to_string(layout.count) + " pixels");
}

ExposurePlan build_plan(const Geometry& g, const Targets& t) {
    if (!t.explicit_phases.empty()) {
        for (const auto& e : t.explicit_phases)
            if (e.phases.size() != g.pair_count())
                throw std::invalid_argument("phases entry needs one value per pair (" + std::to_string(g.pair_count()) + ")");
        return plan_from_phases(g, t.explicit_phases);
    }
    if (t.one_axis.empty()) return plan_from_phases(g, {{1.0, std::vector<double>(g.pair_count(), 0.0)}});
    check_feasible(t.one_axis.size(), pixel_layout(g));
    return plan_pattern(g, t.one_axis);
}

Geometry geometry_y(const Context& ctx, const Geometry& gx) {
    return ctx.config.geometry_y.empty() ? gx : ctx.config.geometry_y.build();
}

TwoAxisPlan build_plan_2d(const Context& ctx, const Geometry& gx, const Targets& t) {
    const Geometry gy = geometry_y(ctx, gx);
    const auto lx = pixel_layout(gx), ly = pixel_layout(gy);
    check_feasible(t.two_axis.size(), {0.0, lx.count * ly.count, 0.0});
    for (const auto& c : t.two_axis) {
        if (c.x < 1 || c.x > lx.count || c.y < 1 || c.y > ly.count)
            throw std::out_of_range("2D target (" + std::to_string(c.x) + "," + std::to_string(c.y) + ") outside " +
                                    std::to_string(lx.count) + "x" + std::to_string(ly.count) + " pixels");
    }
    std::set<PixelTarget2D> seen;
    for (const auto& c : t.two_axis)
        if (!seen.insert({c.x, c.y, c.intermediate, 1.0}).second)
            throw std::invalid_argument("duplicate 2D target " + std::to_string(c.x) + "," + std::to_string(c.y));
    if (ctx.opt.fill_diagonals) return plan_pattern_2d(gx, gy, diagonal_fill(t.two_axis));
    return plan_pattern_2d(gx, gy, t.two_axis);
}

Profile2D plan_profile_2d(const Context& ctx, const TwoAxisPlan& plan) {
    const auto gx = resolve_grid(ctx.config.grid, plan.geometry_x);
    const auto gy = resolve_grid(ctx.config.grid_y, plan.geometry_y);
    const Normalization mode = ctx.normalization();
    if (mode != Normalization::peak_unity) return profile_2d(plan, gx, gy, mode);
    auto p = profile_2d(plan, gx, gy, Normalization::raw);
    const double peak = *std::max_element(p.values.begin(), p.values.end());
    if (!(peak > 0.0)) throw ComputationError("cannot peak-normalize an all-zero profile");
    for (auto& v : p.values) v /= peak;
    p.normalization = Normalization::peak_unity;
    return p;
}

std::set<int> target_set(const ExposurePlan& plan) {
    std::set<int> s;
    for (const auto& a : plan.targets())
        if (!a.intermediate) s.insert(a.index);
    return s;
}

// ---------------------------------------------------------------------------
// rate

StateSource brute_source(const ExposurePlan& plan, int order, double transmission) {
    auto src = state_source(plan.geometry, plan.settings(), order);
    if (transmission >= 1.0) return src;
    std::vector<MixedState::Component> comps;
    for (const auto& c : src.ensemble.components()) {
        const auto mix = lossy_mixture(c.state, {transmission, {}});
        for (const auto& m : mix.components()) comps.push_back({c.weight * m.weight, m.state});
    }
    // pixel_sum scales by entries / pixel_unit; keep that ratio for the larger ensemble.
    const double entries = static_cast<double>(src.ensemble.size());
    StateSource lossy{MixedState(std::move(comps)), order, 0.0};
    lossy.pixel_unit = src.pixel_unit * static_cast<double>(lossy.ensemble.size()) / entries;
    return lossy;
}

int cmd_rate(Context& ctx) {
    const Geometry g = ctx.config.geometry.build();
    const Targets targets = collect_targets(ctx);
    const std::string engine = ctx.engine();
    const Normalization mode = ctx.normalization();

    if (targets.two_dimensional()) {
        if (engine != "closed") throw std::invalid_argument("2D profiles use the closed form; pass --engine closed");
        const auto plan = build_plan_2d(ctx, g, targets);
        ctx.write("profile2d.csv", "rate", profile2d_csv(plan_profile_2d(ctx, plan)));
        return kOk;
    }

    const ExposurePlan plan = build_plan(g, targets);
    const int order = ctx.config.order.value_or(g.total_photons());
    const double eta = ctx.config.transmission.value_or(1.0);
    const SamplingGrid grid = resolve_grid(ctx.config.grid, g);
    const bool want_closed = engine != "brute", want_brute = engine != "closed";
    if (want_closed && order != g.total_photons()) throw std::invalid_argument("closed form requires full-order absorption");
    if (want_closed && eta < 1.0) throw std::invalid_argument("closed form does not model loss; use --engine brute");

    std::ostringstream report;
    std::optional<DepositionProfile> closed, brute;
    if (want_closed) {
        closed = profile(plan.source(), grid, mode);
        ctx.write("profile_closed.csv", "rate", profile_csv(*closed));
        report << "engine=closed samples=" << grid.samples << " max=" << format_real(closed->max()) << '\n';
    }
    if (want_brute) {
        brute = profile(brute_source(plan, order, eta), grid, mode);
        ctx.write("profile_brute.csv", "rate", profile_csv(*brute));
        report << "engine=brute order=" << order << " transmission=" << format_real(eta) << " samples=" << grid.samples
               << " max=" << format_real(brute->max()) << '\n';
    }
    if (closed && brute) {
        double diff = 0.0;
        for (int i = 0; i < grid.samples; ++i) diff = std::max(diff, std::abs(closed->values[i] - brute->values[i]));
        report << "engine_diff max_abs=" << format_real(diff) << '\n';
    }
    const auto targets_1d = target_set(plan);
    if (brute && order < g.total_photons() && !targets_1d.empty()) {
        const auto layout = pixel_layout(g);
        const auto ref = profile(brute_source(plan, g.total_photons(), 1.0), grid, Normalization::peak_unity);
        DepositionProfile lower = *brute;
        if (lower.normalization != Normalization::peak_unity) {
            lower.normalization = Normalization::peak_unity;
            const double peak = lower.max();
            if (!(peak > 0.0)) throw ComputationError("lower-order profile is identically zero");
            for (auto& v : lower.values) v /= peak;
        }
        report << degradation_record(order, degradation_report(lower, ref, layout, targets_1d)) << '\n';
    }
    ctx.write("rate_report.txt", "rate", report.str());
    ctx.out << report.str();
    return kOk;
}

// ---------------------------------------------------------------------------
// plan

double pixel_sum_deviation(const Geometry& g, const std::vector<const ExposurePlan*>& plans, const SamplingGrid& grid) {
    double worst = 0.0;
    for (int i = 0; i < grid.samples; ++i) {
        const double x = grid.at(i);
        double sum = 0.0;
        for (const auto* p : plans)
            for (const auto& e : p->entries) sum += closed_form_rate(g, e.phases, x);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

int cmd_plan(Context& ctx) {
    const Geometry g = ctx.config.geometry.build();
    const Targets targets = collect_targets(ctx);
    if (targets.empty()) throw std::invalid_argument("pattern has no target pixels");
    if (!targets.explicit_phases.empty()) throw std::invalid_argument("plan command needs pixel targets, not phases");

    if (targets.two_dimensional()) {
        if (ctx.opt.negative) throw std::invalid_argument("negative plans are one-dimensional");
        const auto plan = build_plan_2d(ctx, g, targets);
        ctx.write("plan2d.txt", "plan", plan2d_to_text(plan));
        ctx.write("plan_profile2d.csv", "plan", profile2d_csv(plan_profile_2d(ctx, plan)));
        ctx.out << "entries=" << plan.entries.size() << '\n';
        return kOk;
    }

    const ExposurePlan base = build_plan(g, targets);
    const ExposurePlan plan = ctx.opt.negative ? negative_plan(base) : base;
    const auto layout = pixel_layout(g);
    SamplingGrid grid = resolve_grid(ctx.config.grid, g);
    if (!ctx.config.grid.samples) grid.samples = std::max(2049, 64 * layout.count + 1);
    const auto predicted = profile(plan.source(), grid, ctx.normalization());
    const auto peak = profile(plan.source(), grid, Normalization::peak_unity);
    const auto on = target_set(plan);

    std::ostringstream summary;
    summary << "entries=" << plan.entries.size() << " pixels=" << layout.count
            << " pixel_width=" << format_real(layout.width) << " period=" << format_real(layout.period) << '\n';
    double center_penalty = 0.0;
    for (int p = 1; p <= layout.count; ++p)
        if (!on.count(p)) center_penalty = std::max(center_penalty, plan.rate(pixel_center(layout, {p})));
    double center_peak = 0.0;
    for (int p : on) center_peak = std::max(center_peak, plan.rate(pixel_center(layout, {p})));
    summary << "center_penalty=" << format_real(center_peak > 0.0 ? center_penalty / center_peak : 0.0)
            << " penalty=" << format_real(pattern_ripple(peak, layout, on)) << '\n';
    if (ctx.opt.negative) {
        summary << "sum_check max_deviation=" << format_real(pixel_sum_deviation(g, {&base, &plan}, grid)) << '\n';
    }
    ctx.write("plan.txt", "plan", plan_to_text(plan));
    ctx.write("plan_profile.csv", "plan", profile_csv(predicted));
    ctx.write("plan_summary.txt", "plan", summary.str());
    ctx.out << summary.str();
    return kOk;
}

// ---------------------------------------------------------------------------
// expose

int cmd_expose(Context& ctx) {
    const Geometry g = ctx.config.geometry.build();
    const Targets targets = collect_targets(ctx);
    if (targets.two_dimensional()) throw std::invalid_argument("exposure runs take 1D plans");
    const ExposurePlan plan = build_plan(g, targets);
    const auto& f = ctx.config.film;
    if (!f.shots) throw ConfigError(0, "[film] shots is required for expose");
    FilmModel film{f.grains.value_or(100), 1.0};
    if (f.target_mean) {
        const auto on = target_set(plan);
        if (on.empty()) throw ConfigError(0, "[film] target_mean needs a pixel target to tune against");
        film.absorb_prob = tune_absorb_prob(plan, film.grains_per_pixel, *f.shots, *on.begin(), *f.target_mean);
    } else if (f.absorb_prob) {
        film.absorb_prob = *f.absorb_prob;
    } else {
        throw ConfigError(0, "[film] needs absorb_prob or target_mean");
    }
    const auto result = simulate(plan, film, *f.shots, ctx.seed(), f.realizations.value_or(1));
    const auto expected = expected_exposure(plan, film, *f.shots);

    std::ostringstream summary;
    summary << "absorb_prob=" << format_real(film.absorb_prob) << " shots=" << *f.shots << " seed=" << ctx.seed()
            << '\n';
    for (std::size_t p = 0; p < result.per_pixel_mean.size(); ++p)
        summary << "pixel=" << p + 1 << " mean=" << format_real(result.per_pixel_mean[p])
                << " std=" << format_real(result.per_pixel_std[p]) << " expected=" << format_real(expected.mean[p])
                << '\n';
    ctx.write("exposure.txt", "expose", exposure_to_text(result));
    ctx.write("grains.txt", "expose", grain_bitmap(result));
    ctx.write("exposure_summary.txt", "expose", summary.str());
    ctx.out << summary.str();
    return kOk;
}

// ---------------------------------------------------------------------------
// table

int cmd_table(Context& ctx) {
    const auto rows = partition_table(ctx.opt.table_n);
    std::ostringstream os;
    os << "n1,n2,pixels,feature_size_lambda,period_lambda\n";
    for (const auto& r : rows)
        os << r.n1 << ',' << r.n2 << ',' << r.pixels << ',' << to_string(r.feature_size) << ','
           << to_string(r.periodicity) << '\n';
    ctx.out << os.str();
    if (!ctx.opt.out_dir.empty()) ctx.write("table_" + std::to_string(ctx.opt.table_n) + ".csv", "table", os.str());
    return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct Figure {
    std::string name;
    Geometry geometry;
    std::vector<int> targets;  // empty: all phases zero
};

std::vector<Figure> figure_configs() {
    return {
        {"two_pair_mixed", Geometry({{1, 3, 1.0}, {2, 3, 0.25}}), {}},
        {"pixel6", two_pair_geometry(3, 3), {6}},
        {"two_four", two_pair_geometry(2, 4), {4}},
        {"chain_3_6", chain_geometry(3, 6), {13, 15}},
        {"chain_4_7", chain_geometry(4, 7), {13, 15}},
    };
}

ExposurePlan figure_plan(const Figure& f) {
    if (f.targets.empty()) return plan_from_phases(f.geometry, {{1.0, std::vector<double>(f.geometry.pair_count(), 0.0)}});
    return plan_pattern(f.geometry, std::span<const int>(f.targets));
}

SuiteResult suite_sum_to_one() {
    SuiteResult r{"sum-to-one", true, 0.0, ""};
    for (const auto& g : {two_pair_geometry(3, 3), two_pair_geometry(2, 4), chain_geometry(3, 6), chain_geometry(4, 7)}) {
        const auto layout = pixel_layout(g);
        std::vector<int> all(layout.count);
        for (int p = 1; p <= layout.count; ++p) all[p - 1] = p;
        const auto plan = plan_pattern(g, std::span<const int>(all));
        r.max_deviation = std::max(r.max_deviation, pixel_sum_deviation(g, {&plan}, {0.0, layout.period, 2048}));
    }
    r.pass = r.max_deviation < 1e-9;
    r.detail = "geometries=(3,3),(2,4),chain(3,6),chain(4,7)";
    return r;
}

SuiteResult suite_zero_centers() {
    SuiteResult r{"zero-centers", true, 0.0, ""};
    for (const auto& g : {two_pair_geometry(3, 3), two_pair_geometry(2, 4), chain_geometry(3, 6), chain_geometry(4, 7),
                          Geometry({{1, 10, 1.0}})}) {
        const auto layout = pixel_layout(g);
        for (int p = 1; p <= layout.count; ++p) {
            const auto phi = phases_for_pixel(g, {p});
            for (int q = 1; q <= layout.count; ++q)
                if (q != p) r.max_deviation = std::max(r.max_deviation, closed_form_rate(g, phi, pixel_center(layout, {q})));
        }
    }
    r.pass = r.max_deviation < 1e-12;
    r.detail = "single-pixel plans, every non-target center";
    return r;
}

SuiteResult suite_table_one() {
    SuiteResult r{"table-one", true, 0.0, ""};
    int rows_checked = 0;
    for (int n = 1; n <= 5; ++n) {
        for (const auto& row : partition_table(n)) {
            ++rows_checked;
            const auto layout = pixel_layout(two_pair_geometry(row.n1, row.n2));
            const bool exact = row.pixels == static_cast<long long>(row.n1 + 1) * (2 * n - row.n1 + 1) &&
                               row.feature_size == Rational(1, 2 * (row.n1 + 1)) &&
                               row.periodicity == Rational(2 * n - row.n1 + 1, 2) && row.pixels == layout.count;
            if (!exact) r.pass = false;
            r.max_deviation = std::max({r.max_deviation, std::abs(layout.width - boost::rational_cast<double>(row.feature_size)),
                                        std::abs(layout.period - boost::rational_cast<double>(row.periodicity))});
        }
    }
    r.pass = r.pass && r.max_deviation < 1e-12;
    r.detail = "N=1..5 rows=" + std::to_string(rows_checked);
    return r;
}

SuiteResult suite_oracle() {
    SuiteResult r{"oracle", true, 0.0, ""};
    for (const auto& f : figure_configs()) {
        const auto plan = figure_plan(f);
        const SamplingGrid grid{0.0, fundamental_period(f.geometry), 2048};
        const auto closed = profile(plan.source(), grid, Normalization::peak_unity);
        const auto brute =
            profile(state_source(f.geometry, plan.settings(), f.geometry.total_photons()), grid, Normalization::peak_unity);
        for (int i = 0; i < grid.samples; ++i)
            r.max_deviation = std::max(r.max_deviation, std::abs(closed.values[i] - brute.values[i]));
    }
    r.pass = r.max_deviation < 1e-9;
    r.detail = "two_pair_mixed,pixel6,two_four,chain_3_6,chain_4_7 grid=2048";
    return r;
}

SuiteResult suite_loss_law() {
    SuiteResult r{"loss-law", true, 0.0, ""};
    const double eta = 0.9;
    for (const auto& [g, pixel] : {std::pair{Geometry({{1, 4, 1.0}}), 3}, std::pair{two_pair_geometry(2, 2), 5}}) {
        const auto state = realize_state(g, phases_for_pixel(g, {pixel}));
        const auto mix = lossy_mixture(state, {eta, {}});
        const int m = g.total_photons();
        const double factor = std::pow(eta, m);
        const double period = fundamental_period(g);
        for (int i = 0; i < 64; ++i) {
            const double x = period * i / 64.0;
            const double ideal = brute_force_rate(state, x, m);
            const double lossy = brute_force_rate(mix, x, m);
            if (ideal < 1e-12) {
                r.max_deviation = std::max(r.max_deviation, lossy);
                continue;
            }
            r.max_deviation = std::max(r.max_deviation, std::abs(lossy / (factor * ideal) - 1.0));
        }
    }
    r.pass = r.max_deviation < 1e-12;
    r.detail = "eta=0.9 M=4 factor=0.6561 points=64";
    return r;
}

SuiteResult suite_optimality() {
    SuiteResult r{"optimality", true, 0.0, ""};
    int cases = 0;
    for (int m = 2; m <= 8; ++m)
        for (int n = 1; n < m; ++n) {
            ++cases;
            const long long formula = (1LL << (m - n)) * (n + 1);
            const long long got = pixel_layout(chain_geometry(n, m)).count;
            const long long split = static_cast<long long>(m - n + 1) * (n + 1);
            r.max_deviation = std::max(r.max_deviation, static_cast<double>(std::llabs(got - formula)));
            if (got != formula || got < split || (m - n >= 2 && got <= split)) r.pass = false;
        }
    r.pass = r.pass && r.max_deviation == 0.0;
    r.detail = "1<=N<M<=8 cases=" + std::to_string(cases);
    return r;
}

const std::map<std::string, SuiteResult (*)()>& suite_table() {
    static const std::map<std::string, SuiteResult (*)()> t{
        {"sum-to-one", suite_sum_to_one}, {"zero-centers", suite_zero_centers}, {"table-one", suite_table_one},
        {"oracle", suite_oracle},         {"loss-law", suite_loss_law},         {"optimality", suite_optimality},
    };
    return t;
}

int cmd_verify(Context& ctx) {
    const auto results = run_suite(ctx.opt.suite);
    bool ok = true;
    std::ostringstream os;
    for (const auto& r : results) {
        os << format_suite_line(r) << '\n';
        ok = ok && r.pass;
    }
    ctx.out << os.str();
    if (!ctx.opt.out_dir.empty()) ctx.write("verify.txt", "verify", os.str());
    return ok ? kOk : kVerification;
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"sum-to-one", "zero-centers", "table-one",
                                                "oracle",     "loss-law",     "optimality"};
    return names;
}

std::vector<SuiteResult> run_suite(const std::string& name) {
    if (name == "all") {
        std::vector<SuiteResult> out;
        for (const auto& n : suite_names()) out.push_back(suite_table().at(n)());
        return out;
    }
    const auto it = suite_table().find(name);
    if (it == suite_table().end()) throw std::invalid_argument("unknown suite '" + name + "'");
    return {it->second()};
}

std::string format_suite_line(const SuiteResult& r) {
    return "suite=" + r.name + " status=" + (r.pass ? "pass" : "fail") + " max_deviation=" + format_real(r.max_deviation) +
           " " + r.detail;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"qlitho: entangled-state lithography simulator", "qlitho"};
    app.require_subcommand(1);
    Options opt;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config_path, "run configuration file");
        if (needs_config) c->required();
        sub->add_option("--out", opt.out_dir, "output directory (default: config, then $QLITHO_OUT_DIR, then .)");
        sub->add_option("--engine", opt.engine, "deposition engine")->check(CLI::IsMember({"closed", "brute", "both"}));
        sub->add_option("--normalize", opt.normalize, "profile normalization")
            ->check(CLI::IsMember({"raw", "peak", "pixelsum"}));
        sub->add_option("--seed", opt.seed, "Monte Carlo seed");
        sub->add_flag("--negative", opt.negative, "emit the complement plan");
    };

    auto* rate = app.add_subcommand("rate", "deposition-rate profiles");
    common(rate, true);
    auto* plan = app.add_subcommand("plan", "compile a pixel pattern into an exposure plan");
    common(plan, true);
    plan->add_option("--pattern", opt.pattern, "pattern file: pixel numbers, or 'bitmap' then 0/1 rows");
    plan->add_flag("--fill-diagonals", opt.fill_diagonals, "add intermediate pixels along 2D diagonals");
    auto* expose = app.add_subcommand("expose", "Monte Carlo film exposure");
    common(expose, true);
    auto* verify = app.add_subcommand("verify", "invariant verification suites");
    common(verify, false);
    verify->add_option("--suite", opt.suite, "suite name or 'all'");
    auto* table = app.add_subcommand("table", "photon partition table for 2N photons over two pairs");
    common(table, false);
    table->add_option("--N", opt.table_n, "half the total photon number")->required()->check(CLI::Range(1, 1000));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        Context ctx{{}, opt, out};
        if (!opt.config_path.empty()) ctx.config = load_config(opt.config_path);
        if (ctx.config.geometry.empty() && !(*verify || *table)) throw ConfigError(0, "[geometry] section is required");
        if (*rate) return cmd_rate(ctx);
        if (*plan) return cmd_plan(ctx);
        if (*expose) return cmd_expose(ctx);
        if (*verify) return cmd_verify(ctx);
        return cmd_table(ctx);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kComputation;
    }
}

}  // namespace qlitho::cli
