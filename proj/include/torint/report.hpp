#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "torint/certify.hpp"

// System files and JSON reports. Loading accepts the schema
//   {"m", "U", "X": {"dx", "dy"}, "first_integrals", "volume_density"?,
//    "claims": {"symmetries", "one_form"?, "g"?, "h"?, "lambda"?, "Y"?}}
// with every component an expression string over x, y, c_1..c_m. All
// serializers emit ordered_json so identical inputs produce byte-identical
// reports.

namespace torint {

using ordered_json = nlohmann::ordered_json;

struct Claims {
    std::vector<VectorField2> symmetries;
    std::optional<OneForm2> one_form;
    std::optional<Expr> g, h, lambda;
    std::optional<VectorField2> Y;
};

struct SystemFile {
    std::string name;
    FiberedSystem sys;
    Claims claims;
};

namespace detail {

inline Expr expr_of(const nlohmann::json& j, int m) {
    return parse_expr(j.get<std::string>(), m);
}

inline VectorField2 field_of(const nlohmann::json& j, int m) {
    return {expr_of(j.at("dx"), m), expr_of(j.at("dy"), m)};
}

} // namespace detail

inline SystemFile load_system(const nlohmann::json& j) {
    SystemFile f;
    f.name = j.value("name", "");
    f.sys.m = j.value("m", 0);
    if (j.contains("U"))
        for (const auto& interval : j.at("U"))
            f.sys.box.push_back({interval.at(0).get<double>(), interval.at(1).get<double>()});
    if (static_cast<int>(f.sys.box.size()) != f.sys.m)
        throw std::invalid_argument("system file: U must list exactly m intervals");
    const int m = f.sys.m;

    f.sys.X = detail::field_of(j.at("X"), m);
    if (j.contains("first_integrals"))
        for (const auto& s : j.at("first_integrals"))
            f.sys.first_integrals.push_back(detail::expr_of(s, m));
    if (j.contains("volume_density"))
        f.sys.volume = VolumeForm2{detail::expr_of(j.at("volume_density"), m)};

    if (j.contains("claims")) {
        const auto& c = j.at("claims");
        if (c.contains("symmetries"))
            for (const auto& s : c.at("symmetries"))
                f.claims.symmetries.push_back(detail::field_of(s, m));
        if (c.contains("one_form"))
            f.claims.one_form = OneForm2{detail::expr_of(c.at("one_form").at("dx"), m),
                                         detail::expr_of(c.at("one_form").at("dy"), m)};
        if (c.contains("g")) f.claims.g = detail::expr_of(c.at("g"), m);
        if (c.contains("h")) f.claims.h = detail::expr_of(c.at("h"), m);
        if (c.contains("lambda")) f.claims.lambda = detail::expr_of(c.at("lambda"), m);
        if (c.contains("Y")) f.claims.Y = detail::field_of(c.at("Y"), m);
    }
    return f;
}

inline SystemFile load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open system file: " + path);
    return load_system(nlohmann::json::parse(in));  // parse errors carry byte positions
}

// --- serializers ---

inline ordered_json json_of(const Verdict& v) {
    ordered_json j;
    j["name"] = v.name;
    j["residual"] = v.residual;
    j["tolerance"] = v.tolerance;
    j["pass"] = v.pass;
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

inline ordered_json json_of(const Certificate& c) {
    ordered_json j;
    j["pass"] = c.pass();
    j["verdicts"] = ordered_json::array();
    for (const auto& v : c.verdicts) j["verdicts"].push_back(json_of(v));
    j["fiber_points"] = c.fiber_points;
    if (std::isfinite(c.independence_margin)) j["independence_margin"] = c.independence_margin;
    return j;
}

inline ordered_json json_of(const NamedResidual& r) {
    ordered_json j;
    j["name"] = r.name;
    j["value"] = r.value;
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    return j;
}

inline ordered_json json_of(const ConstructionOutcome& out) {
    ordered_json j;
    j["ok"] = out.ok();
    j["tag"] = out.tag;
    j["hypotheses"] = ordered_json::array();
    for (const auto& r : out.hypotheses) j["hypotheses"].push_back(json_of(r));
    j["conclusions"] = ordered_json::array();
    for (const auto& r : out.conclusions) j["conclusions"].push_back(json_of(r));
    if (out.inconsistent) j["inconsistent"] = true;
    if (out.field || out.volume) {
        j["independent"] = out.independent;
        j["independence_margin"] = out.independence_margin;
    }
    if (out.volume_density) {
        j["density_min"] = out.volume_density->min();
        j["density_max"] = out.volume_density->max();
    }
    return j;
}

inline ordered_json json_of(const KernelReport& k) {
    ordered_json j;
    j["dimension"] = k.dimension;
    j["sigma_max"] = k.sigma_max;
    j["threshold"] = k.threshold;
    j["rank_ambiguous"] = k.rank_ambiguous;
    j["ambiguous_dimension"] = k.ambiguous_dimension;
    int tail = std::min<int>(8, static_cast<int>(k.singular_values.size()));
    j["smallest_singular_values"] = std::vector<double>(k.singular_values.end() - tail,
                                                        k.singular_values.end());
    return j;
}

inline ordered_json json_of(const SearchResult& r) {
    ordered_json j;
    switch (r.kind) {
    case SearchKind::Density: j["kind"] = "density"; break;
    case SearchKind::FirstIntegral: j["kind"] = "first_integral"; break;
    case SearchKind::Symmetry: j["kind"] = "symmetry"; break;
    }
    j["grid"] = r.params.grid_n;
    j["band"] = r.params.band;
    j["kernel"] = json_of(r.kernel);
    if (r.kind == SearchKind::Symmetry) j["x_in_kernel"] = r.x_in_kernel;
    j["candidates"] = ordered_json::array();
    for (const auto& c : r.candidates) {
        ordered_json cj;
        cj["residual"] = c.residual;
        switch (r.kind) {
        case SearchKind::Density:
            cj["positive"] = c.positive;
            cj["normalized_mean_one"] = c.normalized_mean_one;
            break;
        case SearchKind::FirstIntegral:
            cj["drift"] = c.drift;
            cj["drift_validated"] = c.drift_validated;
            break;
        case SearchKind::Symmetry:
            cj["min_det"] = c.min_det;
            cj["independent"] = c.independent;
            break;
        }
        j["candidates"].push_back(std::move(cj));
    }
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline ordered_json json_of(const RotationEstimate& est) {
    ordered_json j;
    j["omega"] = {est.omega.x, est.omega.y};
    j["raw"] = {est.raw.x, est.raw.y};
    if (est.ratio) j["ratio"] = *est.ratio;
    j["confidence"] = est.confidence;
    return j;
}

inline ordered_json json_of(const SectionEvidence& s) {
    ordered_json j;
    j["section"] = s.section;
    j["transversal"] = s.transversal;
    if (s.transversal) {
        j["constant_return_time"] = s.constant;
        j["spread"] = s.spread;
    }
    return j;
}

inline ordered_json json_of(const Classification& cl) {
    ordered_json j;
    j["classification"] = cl.tag_string();
    if (cl.density) j["density_search"] = json_of(*cl.density);
    if (cl.integrals) j["integral_search"] = json_of(*cl.integrals);
    if (cl.symmetries) j["symmetry_search"] = json_of(*cl.symmetries);
    if (cl.ej) j["ej_certificate"] = json_of(*cl.ej);
    j["sections"] = ordered_json::array();
    for (const auto& s : cl.sections) j["sections"].push_back(json_of(s));
    if (cl.rotation) j["rotation"] = json_of(*cl.rotation);
    j["notes"] = cl.notes;
    return j;
}

inline void write_report(const ordered_json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << '\n';
}

} // namespace torint
