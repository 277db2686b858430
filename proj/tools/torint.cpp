// Command-line front end: load a system file, run an analysis, write
// report.json (and optional CSVs). Exit codes: 0 = pass/found,
// 2 = fail/not-found, 1 = usage or input error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torint/report.hpp"

using namespace torint;

namespace {

struct Options {
    std::string system_path;
    std::string output = "report.json";
    std::string csv;
    std::vector<double> fiber;
    std::vector<double> initial = {0.1, 0.2};
    int grid = 64;
    int band = 16;
    double tol = kTolHypothesis;
    double horizon = 1000.0;
    int seeds = 8;
    int returns = 16;
    double y0 = 0.0;
};

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("system", opt.system_path, "system file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--grid", opt.grid, "grid size per axis");
    cmd->add_option("--band", opt.band, "trial band K for the spectral searches");
    cmd->add_option("--tol", opt.tol, "hypothesis tolerance");
    cmd->add_option("--horizon", opt.horizon, "integration horizon");
    cmd->add_option("--seeds", opt.seeds, "seeds per Poincare section");
    cmd->add_option("--returns", opt.returns, "returns per seed");
    cmd->add_option("--fiber", opt.fiber, "fiber point c_1,...,c_m")->delimiter(',');
    cmd->add_option("-o,--output", opt.output, "report path");
    cmd->add_option("--csv", opt.csv, "CSV output path (trajectory / section data)");
}

CertifyParams certify_params(const Options& opt) {
    CertifyParams p;
    p.grid_n = opt.grid;
    p.tol = opt.tol;
    p.search.grid_n = opt.grid;
    p.search.band = opt.band;
    p.horizon = opt.horizon;
    p.n_seeds = opt.seeds;
    p.n_returns = opt.returns;
    return p;
}

ordered_json report_head(const std::string& command, const Options& opt) {
    ordered_json j;
    j["command"] = command;
    j["system"] = opt.system_path;
    ordered_json p;
    p["grid"] = opt.grid;
    p["band"] = opt.band;
    p["tol"] = opt.tol;
    p["horizon"] = opt.horizon;
    p["fiber"] = opt.fiber;
    j["parameters"] = std::move(p);
    return j;
}

int finish(ordered_json& report, const Options& opt, bool pass) {
    report["pass"] = pass;
    write_report(report, opt.output);
    std::cout << report["command"].get<std::string>() << ": " << (pass ? "pass" : "fail")
              << " (report: " << opt.output << ")\n";
    return pass ? 0 : 2;
}

const VectorField2* claimed_symmetry(const SystemFile& sf) {
    if (sf.claims.Y) return &*sf.claims.Y;
    if (!sf.claims.symmetries.empty()) return &sf.claims.symmetries.front();
    return nullptr;
}

int run_check_ej(const Options& opt) {
    SystemFile sf = load_system_file(opt.system_path);
    VolumeForm2 mu = sf.sys.volume.value_or(VolumeForm2{});
    Certificate cert = check_ej(sf.sys, mu, opt.fiber, certify_params(opt));
    ordered_json report = report_head("check-ej", opt);
    report["certificate"] = json_of(cert);
    return finish(report, opt, cert.pass());
}

int run_check_b(const Options& opt) {
    SystemFile sf = load_system_file(opt.system_path);
    Certificate cert = check_b(sf.sys, sf.claims.symmetries, opt.fiber, certify_params(opt));
    ordered_json report = report_head("check-b", opt);
    report["certificate"] = json_of(cert);
    return finish(report, opt, cert.pass());
}

int run_classify(const Options& opt) {
    SystemFile sf = load_system_file(opt.system_path);
    Classification cl = classify(sf.sys, opt.fiber, certify_params(opt));
    ordered_json report = report_head("classify", opt);
    report["result"] = json_of(cl);
    std::cout << "classification: " << cl.tag_string() << "\n";
    return finish(report, opt, cl.tag != Tag::Inconclusive);
}

int run_find(const Options& opt, SearchKind kind) {
    SystemFile sf = load_system_file(opt.system_path);
    CertifyParams p = certify_params(opt);
    SearchResult r;
    const char* command = "";
    bool found = false;
    switch (kind) {
    case SearchKind::Density:
        command = "find-density";
        r = find_invariant_density(sf.sys.X, opt.fiber, p.search);
        for (const auto& c : r.candidates) found |= c.positive;
        break;
    case SearchKind::FirstIntegral:
        command = "find-integral";
        r = find_first_integrals(sf.sys.X, opt.fiber, p.search);
        for (const auto& c : r.candidates) found |= c.drift_validated;
        break;
    case SearchKind::Symmetry:
        command = "find-symmetry";
        r = find_symmetries(sf.sys.X, opt.fiber, p.search);
        for (const auto& c : r.candidates) found |= c.independent;
        break;
    }
    ordered_json report = report_head(command, opt);
    report["search"] = json_of(r);
    return finish(report, opt, found);
}

int run_rotation(const Options& opt) {
    SystemFile sf = load_system_file(opt.system_path);
    Vec2d x0{opt.initial[0], opt.initial[1]};
    RotationEstimate est = rotation_vector(sf.sys.X, opt.fiber, x0, opt.horizon);
    ordered_json report = report_head("rotation", opt);
    report["initial"] = {x0.x, x0.y};
    report["rotation"] = json_of(est);
    if (!opt.csv.empty()) {
        Trajectory traj = integrate(sf.sys.X, opt.fiber, x0, opt.horizon);
        std::ofstream out(opt.csv);
        if (!out) throw std::runtime_error("cannot write CSV: " + opt.csv);
        trajectory_csv(traj, out);
    }
    return finish(report, opt, est.ratio.has_value());
}

int run_poincare(const Options& opt) {
    SystemFile sf = load_system_file(opt.system_path);
    ordered_json report = report_head("poincare", opt);
    report["y0"] = opt.y0;
    try {
        SectionData sd = poincare_section(sf.sys.X, opt.fiber, opt.y0, opt.returns, opt.seeds);
        ReturnTimeVerdict v = constant_return_time_test(sd);
        report["transversal"] = true;
        report["return_time"] = {{"min", sd.min_return()},
                                 {"max", sd.max_return()},
                                 {"mean", sd.mean_return()},
                                 {"spread", v.spread},
                                 {"constant", v.constant}};
        if (!opt.csv.empty()) {
            std::ofstream out(opt.csv);
            if (!out) throw std::runtime_error("cannot write CSV: " + opt.csv);
            section_csv(sd, out);
        }
        return finish(report, opt, true);
    } catch (const NonTransversalError& e) {
        report["transversal"] = false;
        report["error"] = e.what();
        return finish(report, opt, false);
    }
}

int run_construct(const Options& opt, const std::string& what) {
    SystemFile sf = load_system_file(opt.system_path);
    ConstructionParams params{opt.grid, opt.tol};
    VolumeForm2 mu = sf.sys.volume.value_or(VolumeForm2{});
    ConstructionOutcome out;

    if (what == "volume" || what == "lie-point-i" || what == "lie-point-ii" ||
        what == "integral-from-pair") {
        const VectorField2* Y = claimed_symmetry(sf);
        if (!Y) throw std::invalid_argument("construct " + what + " needs a claimed Y");
        if (what == "volume") {
            out = volume_from_frame(sf.sys, *Y, opt.fiber, params);
        } else if (what == "integral-from-pair") {
            out = first_integral_from_pair(sf.sys, *Y, mu, sf.claims.lambda, opt.fiber, params);
        } else {
            if (!sf.claims.g || !sf.claims.h)
                throw std::invalid_argument("construct " + what + " needs claimed g and h");
            out = what == "lie-point-i"
                      ? lie_point_combine_i(sf.sys.X, *Y, *sf.claims.g, *sf.claims.h, opt.fiber,
                                            params)
                      : lie_point_combine_ii(sf.sys.X, *Y, *sf.claims.g, *sf.claims.h, opt.fiber,
                                             params);
        }
    } else {  // symmetry-from-form
        if (!sf.claims.one_form)
            throw std::invalid_argument("construct symmetry-from-form needs a claimed one_form");
        out = symmetry_from_one_form(sf.sys, *sf.claims.one_form, mu, opt.fiber, params);
        ProportionalityVerdict ci = check_condition_i(sf.sys, *sf.claims.one_form, mu, opt.fiber,
                                                      params);
        WitnessVerdict cii = check_condition_ii(sf.sys, *sf.claims.one_form, opt.fiber, params);
        ordered_json report = report_head("construct symmetry-from-form", opt);
        report["outcome"] = json_of(out);
        report["condition_i"] = {{"holds", ci.holds}, {"max_det", ci.max_det}, {"scale", ci.scale}};
        report["condition_ii"] = {{"holds", cii.holds},
                                  {"note", cii.note},
                                  {"alpha_norm", cii.alpha_norm},
                                  {"curl", cii.curl}};
        return finish(report, opt, out.ok() && ci.holds);
    }

    ordered_json report = report_head("construct " + what, opt);
    report["outcome"] = json_of(out);
    return finish(report, opt, out.ok());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"integrability analysis of vector fields on fibered two-tori"};
    app.require_subcommand(1);
    Options opt;

    auto* check_ej_cmd = app.add_subcommand("check-ej", "audit the volume/integral hypotheses");
    auto* check_b_cmd = app.add_subcommand("check-b", "audit the symmetry hypotheses");
    auto* classify_cmd = app.add_subcommand("classify", "full evidence pipeline and tag");
    auto* find_sym = app.add_subcommand("find-symmetry", "spectral search for commuting fields");
    auto* find_int = app.add_subcommand("find-integral", "spectral search for first integrals");
    auto* find_den = app.add_subcommand("find-density", "spectral search for invariant densities");
    auto* rotation_cmd = app.add_subcommand("rotation", "rotation vector of the lifted flow");
    auto* poincare_cmd = app.add_subcommand("poincare", "Poincare section and return times");
    auto* construct = app.add_subcommand("construct", "run one of the constructive results");
    construct->require_subcommand(1);
    std::vector<CLI::App*> leaves = {check_ej_cmd, check_b_cmd, classify_cmd,
                                     find_sym,     find_int,    find_den,
                                     rotation_cmd, poincare_cmd};
    for (const char* name : {"volume", "symmetry-from-form", "lie-point-i", "lie-point-ii",
                             "integral-from-pair"})
        leaves.push_back(construct->add_subcommand(name));
    for (CLI::App* leaf : leaves) add_common(leaf, opt);
    rotation_cmd->add_option("--initial", opt.initial, "initial point x,y")
        ->delimiter(',')
        ->expected(2);
    poincare_cmd->add_option("--y0", opt.y0, "section height");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (check_ej_cmd->parsed()) return run_check_ej(opt);
        if (check_b_cmd->parsed()) return run_check_b(opt);
        if (classify_cmd->parsed()) return run_classify(opt);
        if (find_sym->parsed()) return run_find(opt, SearchKind::Symmetry);
        if (find_int->parsed()) return run_find(opt, SearchKind::FirstIntegral);
        if (find_den->parsed()) return run_find(opt, SearchKind::Density);
        if (rotation_cmd->parsed()) return run_rotation(opt);
        if (poincare_cmd->parsed()) return run_poincare(opt);
        for (CLI::App* sub : construct->get_subcommands())
            return run_construct(opt, sub->get_name());
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
