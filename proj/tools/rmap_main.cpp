#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rmap/analysis.hpp"

namespace {

using namespace rmap;

// "p1,p2,...;v1,v2,..." -> TangentVector
TangentVector parse_start(const std::string& text, int dim) {
    auto semi = text.find(';');
    if (semi == std::string::npos)
        throw DegenerateStart("start must look like \"p1,p2;v1,v2\", got '" + text + "'");
    auto parse_list = [&](const std::string& part) {
        std::vector<double> vals;
        std::stringstream ss(part);
        std::string tok;
        while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
        return vals;
    };
    auto ps = parse_list(text.substr(0, semi));
    auto vs = parse_list(text.substr(semi + 1));
    if (static_cast<int>(ps.size()) != dim || static_cast<int>(vs.size()) != dim)
        throw DegenerateStart("start needs " + std::to_string(dim) + " coordinates and " +
                              std::to_string(dim) + " velocity components");
    TangentVector tv{Vec(dim), Vec(dim)};
    for (int i = 0; i < dim; ++i) {
        tv.base[i] = ps[static_cast<std::size_t>(i)];
        tv.components[i] = vs[static_cast<std::size_t>(i)];
    }
    if (tv.components.norm() == 0.0) throw DegenerateStart("initial velocity must be nonzero");
    return tv;
}

int run(int argc, char** argv) {
    CLI::App app{"Numerical analysis of generic Riemannian maps: decomposition, O'Neill tensors, and Clairaut verdicts"};
    app.require_subcommand(1);

    // analyze
    std::string analyze_scenario, analyze_out, analyze_format = "json";
    auto* analyze = app.add_subcommand("analyze", "Run the full analysis pipeline on a scenario JSON");
    analyze->add_option("scenario", analyze_scenario, "Scenario file (or bundled fixture name)")->required();
    analyze->add_option("--out", analyze_out, "Output path (default: stdout)");
    analyze->add_option("--format", analyze_format, "json or text")->check(CLI::IsMember({"json", "text"}));

    // geodesic
    std::string geo_scenario, geo_out_dir = ".";
    std::vector<std::string> geo_starts;
    double geo_t_end = 5.0, geo_step = 1e-3;
    auto* geo = app.add_subcommand("geodesic", "Integrate geodesics and emit Clairaut trace CSV files");
    geo->add_option("scenario", geo_scenario, "Scenario file (or bundled fixture name)")->required();
    geo->add_option("--start", geo_starts, "Start state \"p1,p2;v1,v2\" (repeatable)")->required();
    geo->add_option("--t-end", geo_t_end, "Integration time");
    geo->add_option("--step", geo_step, "Integrator step");
    geo->add_option("--out-dir", geo_out_dir, "Directory for trace CSV files");

    // fixtures
    auto* fix = app.add_subcommand("fixtures", "List or emit the bundled scenarios");
    auto* fix_list = fix->add_subcommand("list", "List bundled fixture names");
    std::string emit_name, emit_out;
    auto* fix_emit = fix->add_subcommand("emit", "Write a bundled fixture as scenario JSON");
    fix_emit->add_option("name", emit_name, "Fixture name")->required();
    fix_emit->add_option("--out", emit_out, "Output path (default: stdout)");
    fix->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    auto load = [](const std::string& ref) {
        if (!std::filesystem::exists(ref)) {
            for (const auto& n : fixtures::names())
                if (n == ref) return scenario_from_fixture(ref);
        }
        return load_scenario(ref);
    };

    if (*analyze) {
        Scenario s = load(analyze_scenario);
        AnalysisReport rep = run_analysis(s);
        emit_report(rep, analyze_format, analyze_out);
        return report_exit_code(rep);
    }
    if (*geo) {
        Scenario s = load(geo_scenario);
        std::vector<TangentVector> starts;
        for (const auto& text : geo_starts) starts.push_back(parse_start(text, s.map.source.dim()));
        std::filesystem::create_directories(geo_out_dir);
        auto written = trace_geodesics(s, starts, geo_t_end, geo_step, geo_out_dir);
        for (const auto& w : written) std::cout << w << "\n";
        return 0;
    }
    if (*fix_list) {
        for (const auto& n : fixtures::names()) std::cout << n << "\n";
        return 0;
    }
    if (*fix_emit) {
        Json j = fixture_to_json(fixtures::by_name(emit_name));
        std::string payload = j.dump(2) + "\n";
        if (emit_out.empty()) {
            std::cout << payload;
        } else {
            std::ofstream out(emit_out, std::ios::binary);
            if (!out) throw IoError("cannot open '" + emit_out + "' for writing");
            out << payload;
        }
        return 0;
    }
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rmap::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
