#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qlitho/planner.hpp"
#include "qlitho/textio.hpp"

namespace qlitho::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

long long parse_integer(const std::string& s) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("not an integer: '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

int parse_int(const std::string& s) {
    const long long v = parse_integer(s);
    if (v < INT32_MIN || v > INT32_MAX) throw std::invalid_argument("integer out of range: '" + s + "'");
    return static_cast<int>(v);
}

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    RunConfig run() {
        std::istringstream is(text_);
        std::string raw;
        while (std::getline(is, raw)) {
            ++line_;
            std::string s = raw.substr(0, raw.find('#'));
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') fail("unterminated section header");
                section_ = trim(s.substr(1, s.size() - 2));
                static const std::set<std::string> known{"geometry", "geometry_y", "plan",  "grid",  "grid_y",
                                                         "absorption", "loss",     "film",  "output"};
                if (!known.count(section_)) fail("unknown section [" + section_ + "]");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) fail("expected key = value");
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (section_.empty()) fail("key '" + key + "' outside any section");
            if (value.empty()) fail("empty value for '" + key + "'");
            try {
                assign(key, value);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                fail(e.what());
            }
        }
        finish();
        return cfg_;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(line_, what); }

    template <typename T>
    void set_once(std::optional<T>& slot, T value, const std::string& key) {
        if (slot) fail("duplicate key '" + key + "' in [" + section_ + "]");
        slot = std::move(value);
    }

    void assign(const std::string& key, const std::string& value) {
        if (section_ == "geometry") return geometry(cfg_.geometry, key, value);
        if (section_ == "geometry_y") return geometry(cfg_.geometry_y, key, value);
        if (section_ == "plan") return plan(key, value);
        if (section_ == "grid") return grid(cfg_.grid, key, value);
        if (section_ == "grid_y") return grid(cfg_.grid_y, key, value);
        if (section_ == "absorption") {
            if (key != "order") fail("unknown key '" + key + "' in [absorption]");
            const int k = parse_int(value);
            if (k < 1) fail("absorption order must be >= 1");
            return set_once(cfg_.order, k, key);
        }
        if (section_ == "loss") {
            if (key != "transmission") fail("unknown key '" + key + "' in [loss]");
            const double eta = parse_real(value);
            if (!(eta >= 0.0 && eta <= 1.0)) fail("transmission must lie in [0, 1]");
            return set_once(cfg_.transmission, eta, key);
        }
        if (section_ == "film") return film(key, value);
        output(key, value);
    }

    void geometry(GeometrySpec& g, const std::string& key, const std::string& value) {
        const auto w = words(value);
        if (key == "chain") {
            if (g.chain || !g.pairs.empty()) fail("chain excludes other geometry entries");
            if (w.size() != 2) fail("chain needs '<N> <M>'");
            ChainSpec c{parse_int(w[0]), parse_int(w[1])};
            if (c.resolution_photons < 1 || c.total_photons < c.resolution_photons) fail("chain needs M >= N >= 1");
            g.chain = c;
            return;
        }
        if (key != "pair") fail("unknown key '" + key + "' in [" + section_ + "]");
        if (g.chain) fail("chain excludes other geometry entries");
        if (w.empty()) fail("pair needs a photon number");
        PairSpec p;
        p.photons = parse_int(w[0]);
        if (p.photons < 0) fail("photon number must be >= 0");
        bool have_scaling = false, have_angle = false;
        for (std::size_t i = 1; i < w.size(); ++i) {
            const auto e = w[i].find('=');
            if (e == std::string::npos) fail("expected option=value, got '" + w[i] + "'");
            const std::string k = w[i].substr(0, e), v = w[i].substr(e + 1);
            if (k == "scaling") {
                p.scaling = parse_fraction(v);
                have_scaling = true;
            } else if (k == "angle_deg") {
                p.scaling = std::sin(parse_real(v) * kPi / 180.0);
                have_angle = true;
            } else {
                fail("unknown pair option '" + k + "'");
            }
        }
        if (have_scaling && have_angle) fail("scaling and angle_deg are mutually exclusive");
        if (!(p.scaling > 0.0 && p.scaling <= 1.0 + 1e-15)) fail("scaling must lie in (0, 1]");
        p.scaling = std::min(p.scaling, 1.0);
        g.pairs.push_back(p);
    }

    void plan(const std::string& key, const std::string& value) {
        if (key == "pattern") return set_once(cfg_.pattern, value, key);
        const auto w = words(value);
        PlanItem item;
        std::size_t first_option = 0;
        if (key == "target") {
            const auto comma = w[0].find(',');
            item.pixel = parse_int(w[0].substr(0, comma));
            if (comma != std::string::npos) item.pixel_y = parse_int(w[0].substr(comma + 1));
            first_option = 1;
        } else if (key == "phases") {
            while (first_option < w.size() && w[first_option].find('=') == std::string::npos &&
                   w[first_option] != "intermediate")
                item.turns.push_back(parse_fraction(w[first_option++]));
            if (item.turns.empty()) fail("phases needs at least one value");
        } else {
            fail("unknown key '" + key + "' in [plan]");
        }
        for (std::size_t i = first_option; i < w.size(); ++i) {
            if (w[i] == "intermediate") {
                if (!item.pixel) fail("intermediate applies to pixel targets only");
                item.intermediate = true;
                continue;
            }
            if (w[i].rfind("weight=", 0) == 0) {
                item.weight = parse_fraction(w[i].substr(7));
                if (!(item.weight > 0.0)) fail("weight must be positive");
                continue;
            }
            fail("unknown plan option '" + w[i] + "'");
        }
        cfg_.plan.push_back(std::move(item));
    }

    void grid(GridSpec& g, const std::string& key, const std::string& value) {
        if (key == "x_min") return set_once(g.x_min, parse_fraction(value), key);
        if (key == "x_max") return set_once(g.x_max, parse_fraction(value), key);
        if (key == "samples") return set_once(g.samples, parse_int(value), key);
        fail("unknown key '" + key + "' in [" + section_ + "]");
    }

    void film(const std::string& key, const std::string& value) {
        if (key == "grains") return set_once(cfg_.film.grains, parse_int(value), key);
        if (key == "absorb_prob") return set_once(cfg_.film.absorb_prob, parse_real(value), key);
        if (key == "target_mean") return set_once(cfg_.film.target_mean, parse_real(value), key);
        if (key == "shots") return set_once(cfg_.film.shots, parse_integer(value), key);
        if (key == "seed") {
            const long long s = parse_integer(value);
            if (s < 0) fail("seed must be >= 0");
            return set_once(cfg_.film.seed, static_cast<std::uint64_t>(s), key);
        }
        if (key == "realizations") return set_once(cfg_.film.realizations, parse_int(value), key);
        fail("unknown key '" + key + "' in [film]");
    }

    void output(const std::string& key, const std::string& value) {
        if (key == "dir") return set_once(cfg_.output.dir, value, key);
        if (key == "normalize") {
            parse_normalization(value);
            return set_once(cfg_.output.normalize, value, key);
        }
        if (key == "engine") {
            if (value != "closed" && value != "brute" && value != "both") fail("engine must be closed, brute or both");
            return set_once(cfg_.output.engine, value, key);
        }
        fail("unknown key '" + key + "' in [output]");
    }

    void finish() {
        auto check_grid = [&](const GridSpec& g, const char* name) {
            if (g.samples && *g.samples < 2) throw ConfigError(0, std::string("[") + name + "] needs samples >= 2");
            if (g.x_min && g.x_max && !(*g.x_max > *g.x_min))
                throw ConfigError(0, std::string("[") + name + "] is empty: x_max must exceed x_min");
        };
        check_grid(cfg_.grid, "grid");
        check_grid(cfg_.grid_y, "grid_y");
        const auto& f = cfg_.film;
        if (f.grains && *f.grains < 2) throw ConfigError(0, "[film] grains must be >= 2");
        if (f.absorb_prob && !(*f.absorb_prob > 0.0 && *f.absorb_prob <= 1.0))
            throw ConfigError(0, "[film] absorb_prob must lie in (0, 1]");
        if (f.shots && *f.shots < 0) throw ConfigError(0, "[film] shots must be >= 0");
        if (f.realizations && *f.realizations < 1) throw ConfigError(0, "[film] realizations must be >= 1");
        if (f.absorb_prob && f.target_mean) throw ConfigError(0, "[film] absorb_prob and target_mean are exclusive");
    }

    const std::string& text_;
    RunConfig cfg_;
    std::string section_;
    int line_ = 0;
};

void write_geometry(std::ostringstream& os, const char* name, const GeometrySpec& g) {
    if (g.empty()) return;
    os << '[' << name << "]\n";
    if (g.chain) os << "chain = " << g.chain->resolution_photons << ' ' << g.chain->total_photons << '\n';
    for (const auto& p : g.pairs) os << "pair = " << p.photons << " scaling=" << format_real(p.scaling) << '\n';
}

void write_grid(std::ostringstream& os, const char* name, const GridSpec& g) {
    if (!g.x_min && !g.x_max && !g.samples) return;
    os << '[' << name << "]\n";
    if (g.x_min) os << "x_min = " << format_real(*g.x_min) << '\n';
    if (g.x_max) os << "x_max = " << format_real(*g.x_max) << '\n';
    if (g.samples) os << "samples = " << *g.samples << '\n';
}

}  // namespace

double parse_fraction(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_real(text);
    const double num = parse_real(text.substr(0, slash));
    const double den = parse_real(text.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("zero denominator in '" + text + "'");
    return num / den;
}

Geometry GeometrySpec::build() const {
    if (chain) return chain_geometry(chain->resolution_photons, chain->total_photons);
    if (pairs.empty()) throw ConfigError(0, "geometry has no pairs");
    std::vector<ModePair> mp;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        mp.push_back({static_cast<int>(i) + 1, pairs[i].photons, pairs[i].scaling});
    return Geometry(std::move(mp));
}

RunConfig parse_config(const std::string& text) { return Parser(text).run(); }

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    write_geometry(os, "geometry", c.geometry);
    write_geometry(os, "geometry_y", c.geometry_y);
    if (!c.plan.empty() || c.pattern) {
        os << "[plan]\n";
        if (c.pattern) os << "pattern = " << *c.pattern << '\n';
        for (const auto& item : c.plan) {
            if (item.pixel) {
                os << "target = " << *item.pixel;
                if (item.pixel_y) os << ',' << *item.pixel_y;
            } else {
                os << "phases =";
                for (double t : item.turns) os << ' ' << format_real(t);
            }
            os << " weight=" << format_real(item.weight);
            if (item.intermediate) os << " intermediate";
            os << '\n';
        }
    }
    write_grid(os, "grid", c.grid);
    write_grid(os, "grid_y", c.grid_y);
    if (c.order) os << "[absorption]\norder = " << *c.order << '\n';
    if (c.transmission) os << "[loss]\ntransmission = " << format_real(*c.transmission) << '\n';
    const auto& f = c.film;
    if (f.grains || f.absorb_prob || f.target_mean || f.shots || f.seed || f.realizations) {
        os << "[film]\n";
        if (f.grains) os << "grains = " << *f.grains << '\n';
        if (f.absorb_prob) os << "absorb_prob = " << format_real(*f.absorb_prob) << '\n';
        if (f.target_mean) os << "target_mean = " << format_real(*f.target_mean) << '\n';
        if (f.shots) os << "shots = " << *f.shots << '\n';
        if (f.seed) os << "seed = " << *f.seed << '\n';
        if (f.realizations) os << "realizations = " << *f.realizations << '\n';
    }
    const auto& o = c.output;
    if (o.dir || o.normalize || o.engine) {
        os << "[output]\n";
        if (o.dir) os << "dir = " << *o.dir << '\n';
        if (o.normalize) os << "normalize = " << *o.normalize << '\n';
        if (o.engine) os << "engine = " << *o.engine << '\n';
    }
    return os.str();
}

}  // namespace qlitho::cli
