// omlab command-line front end.
//
// Exit status: 0 all checks pass, 1 a check failed, 2 config error,
// 3 backend infeasible (every radius underflowed).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "omlab/config.hpp"
#include "omlab/error.hpp"
#include "omlab/report.hpp"
#include "omlab/verify.hpp"

namespace fs = std::filesystem;
using namespace omlab;

namespace {

struct Run {
    std::string subcommand;
    const ExperimentConfig* cfg = nullptr;
    fs::path dir;
    Json report;
    bool pass = true;

    fs::path file(const std::string& stem, const std::string& ext) const {
        return dir / (cfg->prefix + subcommand + (stem.empty() ? "" : "_" + stem) + ext);
    }

    void radius_tables(const std::string& stem, const std::vector<RadiusSample>& samples) const {
        std::ofstream a(file(stem + "_radius", ".csv"));
        write_radius_csv(a, samples, cfg->digest);
        std::ofstream b(file(stem + "_plot", ".csv"));
        write_log_ratio_plot(b, samples, cfg->digest);
    }

    void mass_tables(const std::string& stem, const std::vector<BallMassEstimate>& masses, const MassSource& src,
                     const std::vector<SmallBallPoint>& pts) const {
        std::ofstream a(file(stem + "_masses", ".csv"));
        a << "# " << kCsvVersion << " digest=" << cfg->digest << '\n';
        write_mass_csv(a, masses, &src);
        std::ofstream b(file(stem + "_logmass_plot", ".csv"));
        write_log_mass_plot(b, pts, cfg->digest);
    }
};

std::string pair_stem(const ExperimentConfig& cfg, std::size_t k) { return cfg.pair_names.at(k); }

void need(bool ok, const std::string& what) {
    if (!ok) throw InputError(what);
}

const ScalarField* tilt_of(const ExperimentConfig& cfg) { return cfg.tilt ? &*cfg.V : nullptr; }

std::size_t anchor_of(const ExperimentConfig& cfg) {
    if (cfg.anchor) return *cfg.anchor;
    need(!cfg.pairs.empty(), "points.anchor (or a [pairs] entry) is required");
    return cfg.pairs.front().first;
}

void transform_outputs(Run& run, const TransformReport& rep) {
    run.report["result"] = to_json(rep);
    run.pass = rep.pass;
    for (std::size_t k = 0; k < rep.pairs.size(); ++k)
        run.radius_tables(pair_stem(*run.cfg, k), rep.pairs[k].estimate.per_radius);
    write_text(std::cout, rep);
}

void cmd_om_diff(Run& run) {
    const auto& cfg = *run.cfg;
    need(!cfg.pairs.empty(), "om-diff needs at least one [pairs] entry");
    const auto src = make_mass_source(cfg.space, cfg.metric(), cfg.measure(), cfg.harness);
    Json arr = Json::array();
    const auto radii = cfg.schedule.radii();
    for (std::size_t k = 0; k < cfg.pairs.size(); ++k) {
        const auto est = om_difference(*src, cfg.pairs[k].first, cfg.pairs[k].second, radii, cfg.harness.om);
        arr.push_back(to_json(est));
        run.radius_tables(pair_stem(cfg, k), est.per_radius);
        write_text(std::cout, est);
    }
    run.report["source"] = src->describe();
    run.report["result"] = arr;
}

void cmd_fit_dim(Run& run) {
    const auto& cfg = *run.cfg;
    const auto src = make_mass_source(cfg.space, cfg.metric(), cfg.measure(), cfg.harness);
    const auto radii = cfg.schedule.radii();
    const auto q = anchor_of(cfg);
    const auto fit = fit_local_dimension(*src, q, radii, cfg.schedule.multipliers);
    write_text(std::cout, fit);
    Json res{{"fit", to_json(fit)}};
    if (cfg.raw.count("verify") && cfg.raw.at("verify").count("p")) {
        const bool ok = std::fabs(fit.p - cfg.p) <= cfg.harness.tolerance;
        res["expected_p"] = cfg.p;
        res["p_ok"] = ok;
        run.pass = run.pass && ok;
    }
    if (cfg.anchor2) {
        const auto a = dimension_anchor_independence(*src, q, *cfg.anchor2, radii, cfg.schedule.multipliers);
        res["anchor_independence"] = to_json(a);
        run.pass = run.pass && a.agree;
    }
    std::vector<double> all = radii;
    for (double c : cfg.schedule.multipliers)
        if (c != 1.0)
            for (double r : radii) all.push_back(c * r);
    const auto masses = src->masses(q, all);
    std::vector<SmallBallPoint> pts;
    for (const auto& m : masses) pts.push_back({m.radius, m.log_mass});
    run.mass_tables("anchor", masses, *src, pts);
    run.report["source"] = src->describe();
    run.report["result"] = res;
}

void cmd_fit_smallball(Run& run) {
    const auto& cfg = *run.cfg;
    const auto src = make_mass_source(cfg.space, cfg.metric(), cfg.measure(), cfg.harness);
    const auto q = anchor_of(cfg);
    const auto fit = fit_small_ball(*src, q, cfg.smallball_radii, cfg.smallball);
    write_text(std::cout, fit);
    Json res{{"fit", to_json(fit)}};
    run.pass = fit.detected;
    if (cfg.anchor2) {
        const auto a = small_ball_anchor_independence(*src, q, *cfg.anchor2, cfg.smallball_radii, cfg.smallball);
        res["anchor_independence"] = to_json(a);
        run.pass = run.pass && a.agree;
    }
    run.mass_tables("anchor", src->masses(q, cfg.smallball_radii), *src, fit.points);
    run.report["source"] = src->describe();
    run.report["result"] = res;
}

void cmd_verify_a(Run& run) {
    const auto& cfg = *run.cfg;
    transform_outputs(run, verify_part_a(cfg.space, cfg.c, tilt_of(cfg), cfg.pairs, cfg.schedule.radii(), cfg.harness));
}

void cmd_verify_b(Run& run) {
    const auto& cfg = *run.cfg;
    need(cfg.U.has_value(), "verify-b needs fields.U");
    need(cfg.p > 0.0 || cfg.space->kind() == SpaceKind::AtomSet, "verify-b needs verify.p");
    transform_outputs(run, verify_part_b(cfg.space, *cfg.U, tilt_of(cfg), cfg.p, cfg.pairs, cfg.schedule.radii(),
                                         cfg.schedule.multipliers, cfg.harness));
}

void cmd_probe_c(Run& run) {
    const auto& cfg = *run.cfg;
    need(cfg.U.has_value(), "probe-c needs fields.U");
    need(!cfg.pairs.empty(), "probe-c needs at least one [pairs] entry");
    const auto base = make_mass_source(cfg.space, default_metric(*cfg.space), default_measure(*cfg.space), cfg.harness);
    const auto law = fit_small_ball(*base, anchor_of(cfg), cfg.smallball_radii, cfg.smallball);
    write_text(std::cout, law);
    auto metric = default_metric(*cfg.space);
    metric.conformal_weight = *cfg.U;
    const auto src = make_mass_source(cfg.space, metric, default_measure(*cfg.space), cfg.harness);
    Json probes = Json::array();
    run.pass = law.detected;
    for (std::size_t k = 0; k < cfg.pairs.size(); ++k) {
        const auto [x, y] = cfg.pairs[k];
        const auto rep =
            divergence_probe_c(*src, cfg.U->value(x), cfg.U->value(y), x, y, cfg.schedule.radii(), law, cfg.harness);
        write_text(std::cout, rep);
        probes.push_back(to_json(rep));
        run.radius_tables(pair_stem(cfg, k), rep.per_radius);
        run.pass = run.pass && rep.pass;
    }
    run.mass_tables("anchor", base->masses(anchor_of(cfg), cfg.smallball_radii), *base, law.points);
    run.report["small_ball"] = to_json(law);
    if (!law.detected) run.report["note"] = "no small-ball law detected for the base measure";
    run.report["result"] = probes;
}

void cmd_uniformize(Run& run) {
    const auto& cfg = *run.cfg;
    need(cfg.f.has_value(), "uniformize needs fields.f");
    transform_outputs(run, verify_uniformizer(cfg.space, *cfg.f, cfg.sign, cfg.pairs, cfg.schedule.radii(), cfg.harness));
}

void cmd_target_om(Run& run) {
    const auto& cfg = *run.cfg;
    need(cfg.f.has_value() && cfg.h.has_value(), "target-om needs fields.f and fields.h");
    transform_outputs(run, verify_target_om(cfg.space, *cfg.f, *cfg.h, cfg.pairs, cfg.schedule.radii(), cfg.harness));
}

void cmd_rigidity(Run& run) {
    const auto& cfg = *run.cfg;
    need(cfg.U.has_value() && cfg.U2.has_value(), "rigidity needs fields.U and fields.U2");
    const auto rep = rigidity_check(cfg.space, *cfg.U, *cfg.U2, cfg.pairs, cfg.schedule.radii(), cfg.smallball_radii,
                                    cfg.smallball, cfg.harness);
    write_text(std::cout, rep);
    run.report["result"] = to_json(rep);
    run.pass = rep.pass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"omlab: Onsager-Machlup functionals under conformal changes of metric"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out;

    const std::vector<std::pair<std::string, void (*)(Run&)>> commands{
        {"om-diff", cmd_om_diff},       {"fit-dim", cmd_fit_dim},       {"fit-smallball", cmd_fit_smallball},
        {"verify-a", cmd_verify_a},     {"verify-b", cmd_verify_b},     {"probe-c", cmd_probe_c},
        {"uniformize", cmd_uniformize}, {"target-om", cmd_target_om},   {"rigidity", cmd_rigidity},
    };
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config,-c", config_path, "experiment config (INI)")->required();
        sub->add_option("--set", overrides, "override, section.key=value (repeatable)");
        sub->add_option("--seed", seed, "sets mc.seed");
        sub->add_option("--workers", workers, "sets mc.workers");
        sub->add_option("--out", out, "sets output.dir");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Run run;
    for (const auto& [name, fn] : commands) {
        if (!app.got_subcommand(name)) continue;
        run.subcommand = name;
        auto all = overrides;
        if (seed) all.push_back("mc.seed=" + std::to_string(*seed));
        if (workers) all.push_back("mc.workers=" + std::to_string(*workers));
        if (out) all.push_back("output.dir=" + *out);

        ExperimentConfig cfg;
        try {
            cfg = load_config(config_path, all);
        } catch (const InputError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        }
        run.cfg = &cfg;
        run.dir = cfg.out_dir;
        try {
            fs::create_directories(run.dir);
        } catch (const fs::filesystem_error& e) {
            std::cerr << "config error: output.dir: " << e.what() << '\n';
            return 2;
        }
        run.report = Json{{"schema", kReportSchema},
                          {"subcommand", name},
                          {"config_digest", cfg.digest},
                          {"seed", cfg.harness.mc.seed},
                          {"samples", cfg.harness.mc.samples},
                          {"radii", cfg.schedule.radii()},
                          {"smallball_radii", cfg.smallball_radii}};
        int rc = 0;
        try {
            fn(run);
            rc = run.pass ? 0 : 1;
        } catch (const InputError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        } catch (const InfeasibleError& e) {
            std::cerr << "infeasible: " << e.what() << '\n';
            run.report["error"] = e.what();
            rc = 3;
        } catch (const PreconditionError& e) {
            std::cerr << "precondition: " << e.what() << '\n';
            run.report["error"] = e.what();
            rc = 1;
        }
        run.report["pass"] = rc == 0;
        std::ofstream j(run.file("", ".json"));
        j << run.report.dump(2) << '\n';
        std::cout << (rc == 0 ? "PASS" : "FAIL") << "  report " << run.file("", ".json").string() << '\n';
        return rc;
    }
    return 2;
}
