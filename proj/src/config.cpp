#include "omlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "omlab/error.hpp"

namespace omlab {

const std::map<std::string, std::vector<std::string>>& config_schema() {
    static const std::map<std::string, std::vector<std::string>> schema{
        {"space",
         {"kind", "lower", "upper", "resolution", "point_cap", "atoms", "masses", "atoms_csv", "mass_column", "steps",
          "terminal_time", "centers", "labels"}},
        {"fields", {"U", "V", "f", "h", "U2"}},
        {"metric", {"conformal"}},
        {"measure", {"tilt"}},
        {"schedule", {"r_max", "ratio", "count", "multipliers", "outer"}},
        {"smallball",
         {"r_max", "ratio", "count", "window_lo", "window_hi", "alpha_min", "alpha_max", "alpha_step",
          "slope_threshold", "spread_threshold", "min_radii"}},
        {"points", {"anchor", "anchor2"}},
        {"pairs", {}},  // free-form names
        {"mc", {"backend", "samples", "seed", "partitions", "workers"}},
        {"fit", {"divergence_threshold", "divergence_window"}},
        {"verify", {"tolerance", "p", "c", "sign"}},
        {"output", {"dir", "prefix"}},
    };
    return schema;
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

void check_key(const std::string& section, const std::string& key) {
    const auto& schema = config_schema();
    const auto it = schema.find(section);
    if (it == schema.end()) throw InputError("unknown config section [" + section + "]");
    if (section == "pairs") return;
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw InputError("unknown config key " + section + "." + key);
}

}  // namespace

RawConfig parse_raw_config(const std::string& text, const std::vector<std::string>& overrides) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw InputError(std::string("config syntax: ") + e.what());
    }
    RawConfig raw;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw InputError("config key " + section + " must live inside a [section]");
        for (const auto& [key, value] : body) {
            check_key(section, key);
            raw[section][key] = trim(value.data());
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw InputError("override '" + o + "' must look like section.key=value");
        const auto section = trim(o.substr(0, dot));
        const auto key = trim(o.substr(dot + 1, eq - dot - 1));
        check_key(section, key);
        raw[section][key] = trim(o.substr(eq + 1));
    }
    return raw;
}

std::string canonical_config(const RawConfig& raw) {
    std::string s;
    for (const auto& [section, body] : raw) {
        if (section == "output") continue;
        for (const auto& [key, value] : body) {
            if (section == "mc" && key == "workers") continue;
            s += section + "." + key + "=" + value + "\n";
        }
    }
    return s;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

namespace {

// typed access with key-naming errors
class Reader {
public:
    Reader(const RawConfig& raw, std::filesystem::path base) : raw_(raw), base_(std::move(base)) {}

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        const auto s = raw_.find(section);
        if (s == raw_.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }
    std::string str(const std::string& section, const std::string& key, const std::string& def) const {
        return get(section, key).value_or(def);
    }
    std::string require(const std::string& section, const std::string& key) const {
        auto v = get(section, key);
        if (!v || v->empty()) throw InputError("missing config key " + section + "." + key);
        return *v;
    }
    static double to_number(const std::string& name, const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || trim(s.substr(used)) != "" || std::isnan(v))
            throw InputError(name + ": expected a number, got '" + s + "'");
        return v;
    }
    double num(const std::string& section, const std::string& key, double def) const {
        const auto v = get(section, key);
        return v ? to_number(section + "." + key, *v) : def;
    }
    std::size_t count(const std::string& section, const std::string& key, std::size_t def) const {
        const auto v = get(section, key);
        if (!v) return def;
        const double d = to_number(section + "." + key, *v);
        if (d < 0 || d != std::floor(d) || d > 1e15)
            throw InputError(section + "." + key + ": expected a nonnegative integer, got '" + *v + "'");
        return static_cast<std::size_t>(d);
    }
    std::vector<double> numbers(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& part : split(require(section, key), ','))
            out.push_back(to_number(section + "." + key, part));
        return out;
    }
    std::filesystem::path path(const std::string& p) const {
        std::filesystem::path q(p);
        return q.is_absolute() || base_.empty() ? q : base_ / q;
    }

private:
    const RawConfig& raw_;
    std::filesystem::path base_;
};

std::shared_ptr<const SampledSpace> build_space(const Reader& in) {
    const auto kind = in.require("space", "kind");
    if (kind == "grid") {
        const auto lo = in.numbers("space", "lower");
        const auto hi = in.numbers("space", "upper");
        const auto res_d = in.numbers("space", "resolution");
        if (lo.size() != hi.size() || lo.size() != res_d.size())
            throw InputError("space.lower, space.upper and space.resolution must have the same length");
        std::vector<std::size_t> res;
        for (double r : res_d) {
            if (r < 2 || r != std::floor(r)) throw InputError("space.resolution entries must be integers >= 2");
            res.push_back(static_cast<std::size_t>(r));
        }
        for (std::size_t a = 0; a < lo.size(); ++a)
            if (!(hi[a] > lo[a])) throw InputError("space.upper must exceed space.lower on every axis");
        return build_grid(Box{lo, hi}, res, in.count("space", "point_cap", kDefaultPointCap));
    }
    if (kind == "atoms") {
        if (auto csv = in.get("space", "atoms_csv")) {
            const auto table = read_csv(in.path(*csv).string());
            return atoms_from_csv(table, in.str("space", "mass_column", "mass"));
        }
        std::vector<std::vector<double>> coords;
        for (const auto& part : split(in.require("space", "atoms"), '|')) {
            std::vector<double> p;
            for (const auto& c : split(part, ',')) p.push_back(Reader::to_number("space.atoms", c));
            coords.push_back(p);
        }
        const auto masses = in.numbers("space", "masses");
        if (masses.size() != coords.size()) throw InputError("space.masses must list one mass per atom");
        std::vector<std::string> labels;
        if (auto l = in.get("space", "labels")) labels = split(*l, '|');
        return build_atoms(coords, masses, labels);
    }
    if (kind == "paths") {
        const auto steps = in.count("space", "steps", 64);
        const double T = in.num("space", "terminal_time", 1.0);
        if (!(T > 0.0)) throw InputError("space.terminal_time must be positive");
        std::vector<Expression> centers;
        for (const auto& c : split(in.require("space", "centers"), '|')) {
            try {
                centers.push_back(Expression::parse(c));
            } catch (const InputError& e) {
                throw InputError(std::string("space.centers: ") + e.what());
            }
        }
        std::vector<std::string> labels;
        if (auto l = in.get("space", "labels")) labels = split(*l, '|');
        return build_path_lattice(steps, T, centers, labels);
    }
    throw InputError("space.kind must be grid, atoms or paths (got '" + kind + "')");
}

std::optional<ScalarField> build_field(const Reader& in, const std::shared_ptr<const SampledSpace>& space,
                                       const std::string& key) {
    const auto v = in.get("fields", key);
    if (!v) return std::nullopt;
    const std::string name = "fields." + key;
    try {
        if (v->rfind("csv:", 0) == 0) {
            const auto rest = v->substr(4);
            const auto colon = rest.rfind(':');
            if (colon == std::string::npos) throw InputError("expected csv:<file>:<column>");
            const auto table = read_csv(in.path(rest.substr(0, colon)).string());
            return field_from_csv(space, table, rest.substr(colon + 1));
        }
        const auto expr = Expression::parse(*v);
        if (space->kind() != SpaceKind::PathLattice && expr.max_coordinate() > static_cast<int>(space->dimension()))
            throw InputError("references x" + std::to_string(expr.max_coordinate()) + " on a " +
                             std::to_string(space->dimension()) + "-dimensional space");
        return ScalarField::from_expression(space, expr);
    } catch (const InputError& e) {
        throw InputError(name + ": " + e.what());
    }
}

std::size_t resolve_point(const SampledSpace& space, const std::string& spec, const std::string& key) {
    if (space.kind() != SpaceKind::EuclideanGrid) {
        for (std::size_t i = 0; i < space.size(); ++i)
            if (space.label(i) == spec) return i;
        if (space.kind() == SpaceKind::PathLattice)
            throw InputError(key + ": unknown center path '" + spec + "'");
    }
    std::vector<double> p;
    for (const auto& c : split(spec, ',')) p.push_back(Reader::to_number(key, c));
    if (p.size() != space.dimension())
        throw InputError(key + ": point '" + spec + "' needs " + std::to_string(space.dimension()) + " coordinates");
    return space.nearest(p);
}

}  // namespace

MetricSpec ExperimentConfig::metric() const {
    auto m = default_metric(*space);
    if (conformal) m.conformal_weight = *U;
    return m;
}

MeasureSpec ExperimentConfig::measure() const {
    auto m = default_measure(*space);
    if (tilt) m.tilt = *V;
    return m;
}

ExperimentConfig build_config(const RawConfig& raw, const std::filesystem::path& base) {
    Reader in(raw, base);
    ExperimentConfig cfg;
    cfg.raw = raw;
    cfg.digest = sha256_hex(canonical_config(raw));

    cfg.space = build_space(in);
    cfg.U = build_field(in, cfg.space, "U");
    cfg.V = build_field(in, cfg.space, "V");
    cfg.f = build_field(in, cfg.space, "f");
    cfg.h = build_field(in, cfg.space, "h");
    cfg.U2 = build_field(in, cfg.space, "U2");

    const auto conformal = in.str("metric", "conformal", "none");
    if (conformal != "none" && conformal != "U") throw InputError("metric.conformal must be none or U");
    cfg.conformal = conformal == "U";
    if (cfg.conformal && !cfg.U) throw InputError("metric.conformal = U needs fields.U");
    const auto tilt = in.str("measure", "tilt", cfg.V ? "V" : "none");
    if (tilt != "none" && tilt != "V") throw InputError("measure.tilt must be none or V");
    cfg.tilt = tilt == "V";
    if (cfg.tilt && !cfg.V) throw InputError("measure.tilt = V needs fields.V");

    cfg.schedule.r_max = in.num("schedule", "r_max", cfg.schedule.r_max);
    cfg.schedule.ratio = in.num("schedule", "ratio", cfg.schedule.ratio);
    cfg.schedule.count = in.count("schedule", "count", cfg.schedule.count);
    if (in.get("schedule", "multipliers")) cfg.schedule.multipliers = in.numbers("schedule", "multipliers");
    cfg.schedule.outer = in.num("schedule", "outer", 0.0);
    cfg.schedule.validate();

    RadiusSchedule sb;
    sb.r_max = in.num("smallball", "r_max", cfg.schedule.r_max);
    sb.ratio = in.num("smallball", "ratio", cfg.schedule.ratio);
    sb.count = in.count("smallball", "count", std::max<std::size_t>(cfg.schedule.count, 8));
    try {
        sb.validate();
    } catch (const InputError& e) {
        std::string msg = e.what();
        throw InputError("smallball" + msg.substr(msg.find('.')));
    }
    cfg.smallball_radii = sb.radii();
    auto& so = cfg.smallball;
    so.window_lo = in.num("smallball", "window_lo", so.window_lo);
    so.window_hi = in.num("smallball", "window_hi", so.window_hi);
    so.alpha_min = in.num("smallball", "alpha_min", so.alpha_min);
    so.alpha_max = in.num("smallball", "alpha_max", so.alpha_max);
    so.alpha_step = in.num("smallball", "alpha_step", so.alpha_step);
    so.slope_threshold = in.num("smallball", "slope_threshold", so.slope_threshold);
    so.spread_threshold = in.num("smallball", "spread_threshold", so.spread_threshold);
    so.min_radii = in.count("smallball", "min_radii", so.min_radii);
    if (so.window_lo < 0.0 || !(so.window_hi > so.window_lo)) throw InputError("smallball.window_hi must exceed smallball.window_lo >= 0");
    if (!(so.alpha_min > 0.0) || !(so.alpha_max > so.alpha_min) || !(so.alpha_step > 0.0))
        throw InputError("smallball.alpha_min/alpha_max/alpha_step describe an empty grid");

    if (auto it = raw.find("pairs"); it != raw.end()) {
        for (const auto& [name, value] : it->second) {
            const auto ends = split(value, '|');
            if (ends.size() != 2) throw InputError("pairs." + name + " must look like <x> | <y>");
            cfg.pairs.emplace_back(resolve_point(*cfg.space, ends[0], "pairs." + name),
                                   resolve_point(*cfg.space, ends[1], "pairs." + name));
            cfg.pair_names.push_back(name);
        }
    }
    if (auto a = in.get("points", "anchor")) cfg.anchor = resolve_point(*cfg.space, *a, "points.anchor");
    if (auto a = in.get("points", "anchor2")) cfg.anchor2 = resolve_point(*cfg.space, *a, "points.anchor2");

    auto& h = cfg.harness;
    h.config_digest = cfg.digest;
    const auto backend = in.str("mc", "backend", "quadrature");
    if (backend == "quadrature") h.path_backend = PathBackend::Quadrature;
    else if (backend == "monte-carlo") h.path_backend = PathBackend::MonteCarlo;
    else throw InputError("mc.backend must be quadrature or monte-carlo");
    h.mc.samples = in.count("mc", "samples", h.mc.samples);
    h.mc.seed = in.count("mc", "seed", h.mc.seed);
    h.mc.partitions = in.count("mc", "partitions", h.mc.partitions);
    h.mc.workers = in.count("mc", "workers", h.mc.workers);
    if (h.mc.samples == 0) throw InputError("mc.samples must be positive");
    if (h.mc.partitions == 0 || h.mc.partitions > h.mc.samples)
        throw InputError("mc.partitions must lie in [1, mc.samples]");
    if (h.mc.workers == 0) throw InputError("mc.workers must be positive");

    h.om.divergence_threshold = in.num("fit", "divergence_threshold", h.om.divergence_threshold);
    h.om.divergence_window = in.count("fit", "divergence_window", h.om.divergence_window);
    if (!(h.om.divergence_threshold > 0.0)) throw InputError("fit.divergence_threshold must be positive");

    const bool mc_pipeline = cfg.space->kind() == SpaceKind::PathLattice && h.path_backend == PathBackend::MonteCarlo;
    h.tolerance = in.num("verify", "tolerance", mc_pipeline ? 0.15 : 0.1);
    if (!(h.tolerance > 0.0)) throw InputError("verify.tolerance must be positive");
    cfg.p = in.num("verify", "p", 0.0);
    cfg.c = in.num("verify", "c", 0.0);
    cfg.sign = in.num("verify", "sign", 1.0);
    if (cfg.sign != 1.0 && cfg.sign != -1.0) throw InputError("verify.sign must be 1 or -1");

    cfg.out_dir = in.str("output", "dir", "out");
    cfg.prefix = in.str("output", "prefix", "");
    return cfg;
}

ExperimentConfig build_config(const RawConfig& raw) { return build_config(raw, {}); }

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    const auto raw = parse_raw_config(ss.str(), overrides);
    return build_config(raw, std::filesystem::path(path).parent_path());
}

}  // namespace omlab
