#include "omlab/report.hpp"

#include <cmath>
#include <cstdio>

namespace omlab {

Json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "+inf" : "-inf";
}

Json to_json(const LinearFit& f) {
    return Json{{"intercept", json_number(f.intercept)},
                {"slope", json_number(f.slope)},
                {"intercept_error", json_number(f.intercept_error)},
                {"residual", json_number(f.residual)},
                {"points", f.points},
                {"weighted", f.weighted}};
}

namespace {

Json samples_json(const std::vector<RadiusSample>& samples) {
    Json a = Json::array();
    for (const auto& s : samples)
        a.push_back({{"radius", s.radius}, {"log_ratio", json_number(s.log_ratio)}, {"std_error", s.std_error}});
    return a;
}

Json pair_json(const PairResult& p) {
    return Json{{"x", p.x_name},
                {"y", p.y_name},
                {"x_index", p.x},
                {"y_index", p.y},
                {"empirical", json_number(p.empirical)},
                {"predicted", json_number(p.predicted)},
                {"gap", json_number(p.gap)},
                {"fit_error", json_number(p.estimate.fit_error())},
                {"estimate", to_json(p.estimate)}};
}

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

Json to_json(const OMDifferenceEstimate& e) {
    Json dropped = Json::array();
    for (double r : e.dropped_radii) dropped.push_back(r);
    return Json{{"x", e.x_name},
                {"y", e.y_name},
                {"value", json_number(e.value)},
                {"diverged", to_string(e.diverged)},
                {"fit", to_json(e.fit)},
                {"per_radius", samples_json(e.per_radius)},
                {"dropped_radii", dropped}};
}

Json to_json(const DimensionFit& f) {
    Json per = Json::array();
    for (const auto& m : f.per_multiplier)
        per.push_back({{"multiplier", m.multiplier},
                       {"log_ratio", json_number(m.log_ratio)},
                       {"ratio", json_number(m.ratio)},
                       {"fit", to_json(m.fit)}});
    return Json{{"anchor", f.anchor}, {"p", json_number(f.p)}, {"residual", json_number(f.residual)},
                {"per_multiplier", per}};
}

Json to_json(const SmallBallFit& f) {
    Json pts = Json::array();
    for (const auto& p : f.points) pts.push_back({{"radius", p.radius}, {"log_mass", json_number(p.log_mass)}});
    return Json{{"anchor", f.anchor},
                {"alpha", json_number(f.alpha)},
                {"C", json_number(f.C_const)},
                {"window", {f.window_lo, f.window_hi}},
                {"alpha_interval", {f.alpha_lo, f.alpha_hi}},
                {"residual", json_number(f.residual)},
                {"spread", json_number(f.spread)},
                {"law_rms", json_number(f.law_rms)},
                {"power_law_rms", json_number(f.power_rms)},
                {"detected", f.detected},
                {"points", pts}};
}

Json to_json(const AnchorReport& a) {
    return Json{{"q1", a.q1},
                {"q2", a.q2},
                {"value1", json_number(a.value1)},
                {"value2", json_number(a.value2)},
                {"interval1", {a.lo1, a.hi1}},
                {"interval2", {a.lo2, a.hi2}},
                {"tolerance", a.tolerance},
                {"agree", a.agree}};
}

Json to_json(const TransformReport& r) {
    Json pairs = Json::array();
    for (const auto& p : r.pairs) pairs.push_back(pair_json(p));
    Json j{{"case", to_string(r.kind)},
           {"config_digest", r.config_digest},
           {"source", r.source},
           {"radii", r.radii},
           {"tolerance", r.tolerance},
           {"max_gap", json_number(r.max_gap)},
           {"pass", r.pass},
           {"pairs", pairs}};
    if (r.dimension_check) j["dimension_check"] = to_json(*r.dimension_check);
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

Json to_json(const DivergenceReport& r) {
    return Json{{"x", r.x_name},
                {"y", r.y_name},
                {"U_x", r.u_x},
                {"U_y", r.u_y},
                {"diverged", to_string(r.diverged)},
                {"direction", r.direction},
                {"max_abs_log_ratio", json_number(r.max_abs_log_ratio)},
                {"rate_exponent", json_number(r.rate_exponent)},
                {"rate_coefficient", json_number(r.rate_coefficient)},
                {"predicted_coefficient", json_number(r.predicted_coefficient)},
                {"alpha", json_number(r.alpha)},
                {"C", json_number(r.C_const)},
                {"rate_ok", r.rate_ok},
                {"pass", r.pass},
                {"note", r.note},
                {"per_radius", samples_json(r.per_radius)}};
}

Json to_json(const RigidityReport& r) {
    auto arm = [](const RigidityArm& a) {
        Json d = Json::array();
        for (const auto& p : a.differences) d.push_back(pair_json(p));
        Json pr = Json::array();
        for (const auto& p : a.probes) pr.push_back(to_json(p));
        return Json{{"constant", a.constant}, {"differences", d}, {"probes", pr}};
    };
    Json j{{"case", "rigidity"},
           {"config_digest", r.config_digest},
           {"precondition_met", r.precondition_met},
           {"pass", r.pass},
           {"agree", r.agree},
           {"tolerance", r.tolerance},
           {"note", r.note}};
    if (r.law) j["small_ball"] = to_json(*r.law);
    j["first"] = arm(r.first);
    j["second"] = arm(r.second);
    return j;
}

Json to_json(const BallMassEstimate& e) {
    return Json{{"center", e.center},
                {"radius", e.radius},
                {"mass", json_number(e.mass)},
                {"log_mass", json_number(e.log_mass)},
                {"std_error", e.std_error},
                {"method", to_string(e.method)},
                {"samples", e.sample_count},
                {"seed", e.seed},
                {"underflow", e.underflow}};
}

void write_text(std::ostream& out, const TransformReport& r) {
    out << "case " << to_string(r.kind) << "  (" << r.source << ")\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %-24s %12s %12s %10s %10s\n", "x", "y", "empirical", "predicted", "gap",
                  "fit_err");
    out << line;
    for (const auto& p : r.pairs) {
        std::snprintf(line, sizeof line, "%-24s %-24s %12.6f %12.6f %10.2e %10.2e\n", p.x_name.c_str(),
                      p.y_name.c_str(), p.empirical, p.predicted, p.gap, p.estimate.fit_error());
        out << line;
    }
    if (r.dimension_check) out << "local dimension p = " << fmt(r.dimension_check->p, "%.4f") << '\n';
    out << "max_gap " << fmt(r.max_gap, "%.4g") << "  tolerance " << fmt(r.tolerance) << "  "
        << (r.pass ? "PASS" : "FAIL") << '\n';
    if (!r.note.empty()) out << r.note << '\n';
}

void write_text(std::ostream& out, const DivergenceReport& r) {
    out << "probe " << r.x_name << " vs " << r.y_name << "  U(x)=" << fmt(r.u_x) << " U(y)=" << fmt(r.u_y) << '\n';
    char line[128];
    for (const auto& s : r.per_radius) {
        std::snprintf(line, sizeof line, "  r=%-12.6g log-ratio=%14.6f  se=%.2e\n", s.radius, s.log_ratio, s.std_error);
        out << line;
    }
    out << "diverged " << to_string(r.diverged) << " (" << r.direction << ")  rate exponent "
        << fmt(r.rate_exponent, "%.4f") << " vs alpha " << fmt(r.alpha, "%.4f") << "  kappa "
        << fmt(r.rate_coefficient) << " predicted " << fmt(r.predicted_coefficient) << "  "
        << (r.pass ? "PASS" : "FAIL") << '\n';
    if (!r.note.empty()) out << r.note << '\n';
}

void write_text(std::ostream& out, const RigidityReport& r) {
    out << "rigidity: " << r.note << "  " << (r.pass ? "PASS" : "FAIL") << '\n';
    if (r.law) out << "small-ball alpha " << fmt(r.law->alpha, "%.4f") << " C " << fmt(r.law->C_const) << '\n';
    for (const auto* a : {&r.first, &r.second}) {
        for (const auto& p : a->differences)
            out << "  " << p.x_name << " -> " << p.y_name << "  " << fmt(p.empirical, "%.6f") << '\n';
        for (const auto& p : a->probes) write_text(out, p);
    }
}

void write_text(std::ostream& out, const OMDifferenceEstimate& e) {
    out << "OM(" << e.y_name << ") - OM(" << e.x_name << ") = " << fmt(e.value, "%.6f") << "  +- "
        << fmt(e.fit_error(), "%.2e") << "  diverged " << to_string(e.diverged) << '\n';
    char line[128];
    for (const auto& s : e.per_radius) {
        std::snprintf(line, sizeof line, "  r=%-12.6g log-ratio=%14.8f  se=%.2e\n", s.radius, s.log_ratio, s.std_error);
        out << line;
    }
}

void write_text(std::ostream& out, const DimensionFit& f) {
    out << "local dimension p = " << fmt(f.p, "%.5f") << "  residual " << fmt(f.residual, "%.2e") << '\n';
    for (const auto& m : f.per_multiplier)
        out << "  C=" << fmt(m.multiplier) << "  log ratio " << fmt(m.log_ratio, "%.6f") << '\n';
}

void write_text(std::ostream& out, const SmallBallFit& f) {
    out << "small ball alpha " << fmt(f.alpha, "%.4f") << " [" << fmt(f.alpha_lo, "%.2f") << ", "
        << fmt(f.alpha_hi, "%.2f") << "]  C " << fmt(f.C_const) << "  window [" << fmt(f.window_lo) << ", "
        << fmt(f.window_hi) << "]  spread " << fmt(f.spread, "%.3g") << "  " << (f.detected ? "detected" : "not detected")
        << '\n';
}

void write_radius_csv(std::ostream& out, const std::vector<RadiusSample>& samples, const std::string& digest) {
    out << "# " << kCsvVersion << " digest=" << digest << '\n';
    out << "radius,log_ratio,std_error\n";
    out.precision(17);
    for (const auto& s : samples) out << s.radius << ',' << s.log_ratio << ',' << s.std_error << '\n';
}

void write_log_ratio_plot(std::ostream& out, const std::vector<RadiusSample>& samples, const std::string& digest) {
    out << "# " << kCsvVersion << " digest=" << digest << '\n';
    out << "r,log_ratio\n";
    out.precision(17);
    for (const auto& s : samples) out << s.radius << ',' << s.log_ratio << '\n';
}

void write_log_mass_plot(std::ostream& out, const std::vector<SmallBallPoint>& points, const std::string& digest) {
    out << "# " << kCsvVersion << " digest=" << digest << '\n';
    out << "log_r,log_mass\n";
    out.precision(17);
    for (const auto& p : points) out << std::log(p.radius) << ',' << p.log_mass << '\n';
}

}  // namespace omlab
