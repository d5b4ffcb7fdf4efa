#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmap/fixtures.hpp"

namespace rmap {

using Json = nlohmann::ordered_json;

struct Tolerances {
    double structure = 1e-8;
    double rank = 1e-8;
    double lemma = 1e-4;
    double theorem = 1e-4;
    double trace = 1e-5;
};

// A fully validated analysis input: everything the pipeline needs, with all
// expressions parsed.
struct Scenario {
    std::string name;
    MapSpec map;
    std::optional<ComplexStructureField> structure;
    std::optional<Expression> girth_log;
    std::uint64_t seed = 1;
    int samples = 64;
    Tolerances tols;
    std::vector<std::string> notes;
    std::string hash; // FNV-1a of the canonical input JSON
};

// FNV-1a over the canonical scenario serialization; stamped into reports.
inline std::string scenario_hash(const Json& scenario_json) {
    std::string dump = scenario_json.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

namespace detail {

inline const Json& require_field(const Json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + ": missing required field '" + key + "'");
    return *it;
}

inline Expression parse_expr_field(const Json& j, int n_vars, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path + ": expected an expression string");
    try {
        return Expression::parse(j.get<std::string>(), n_vars);
    } catch (const Error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

inline ManifoldSpec parse_manifold(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    const Json& jd = require_field(j, "dim", path);
    if (!jd.is_number_integer() || jd.get<int>() < 1) throw SchemaError(path + ".dim: expected a positive integer");
    const int dim = jd.get<int>();

    const Json& jm = require_field(j, "metric", path);
    if (!jm.is_array() || static_cast<int>(jm.size()) != dim)
        throw SchemaError(path + ".metric: expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                          " array of expression strings");
    std::vector<std::vector<Expression>> metric(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        const Json& row = jm[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw SchemaError(path + ".metric[" + std::to_string(i) + "]: expected " + std::to_string(dim) +
                              " entries");
        for (int k = 0; k < dim; ++k)
            metric[static_cast<std::size_t>(i)].push_back(parse_expr_field(
                row[static_cast<std::size_t>(k)], dim,
                path + ".metric[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    }

    const Json& jb = require_field(j, "domain", path);
    const Json& jlo = require_field(jb, "min", path + ".domain");
    const Json& jhi = require_field(jb, "max", path + ".domain");
    if (!jlo.is_array() || !jhi.is_array() || static_cast<int>(jlo.size()) != dim ||
        static_cast<int>(jhi.size()) != dim)
        throw SchemaError(path + ".domain: min/max must be arrays of length " + std::to_string(dim));
    DomainBox box{Vec(dim), Vec(dim)};
    for (int i = 0; i < dim; ++i) {
        box.lo[i] = jlo[static_cast<std::size_t>(i)].get<double>();
        box.hi[i] = jhi[static_cast<std::size_t>(i)].get<double>();
        if (!(box.lo[i] < box.hi[i]))
            throw SchemaError(path + ".domain: min[" + std::to_string(i) + "] must be below max[" +
                              std::to_string(i) + "]");
    }
    return ManifoldSpec(dim, std::move(metric), std::move(box));
}

} // namespace detail

inline Scenario scenario_from_json(const Json& j, const std::string& origin = "scenario") {
    if (!j.is_object()) throw SchemaError(origin + ": expected a JSON object");
    Scenario s;
    s.hash = scenario_hash(j);
    if (j.contains("name")) s.name = j["name"].get<std::string>();

    s.map.source = detail::parse_manifold(detail::require_field(j, "source", origin), origin + ".source");
    s.map.target = detail::parse_manifold(detail::require_field(j, "target", origin), origin + ".target");

    const Json& jmap = detail::require_field(j, "map", origin);
    if (!jmap.is_array() || static_cast<int>(jmap.size()) != s.map.target.dim())
        throw SchemaError(origin + ".map: expected " + std::to_string(s.map.target.dim()) +
                          " component expressions");
    for (std::size_t i = 0; i < jmap.size(); ++i)
        s.map.components.push_back(detail::parse_expr_field(jmap[i], s.map.source.dim(),
                                                            origin + ".map[" + std::to_string(i) + "]"));

    if (j.contains("complex_structure") && !j["complex_structure"].is_null()) {
        const Json& js = j["complex_structure"];
        const int m = s.map.source.dim();
        if (!js.is_array() || static_cast<int>(js.size()) != m)
            throw SchemaError(origin + ".complex_structure: expected a " + std::to_string(m) + "x" +
                              std::to_string(m) + " array");
        std::vector<std::vector<Expression>> comps(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const Json& row = js[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<int>(row.size()) != m)
                throw SchemaError(origin + ".complex_structure[" + std::to_string(i) + "]: expected " +
                                  std::to_string(m) + " entries");
            for (int k = 0; k < m; ++k)
                comps[static_cast<std::size_t>(i)].push_back(detail::parse_expr_field(
                    row[static_cast<std::size_t>(k)], m,
                    origin + ".complex_structure[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
        }
        s.structure = ComplexStructureField(std::move(comps));
    }

    if (j.contains("girth_log") && !j["girth_log"].is_null())
        s.girth_log = detail::parse_expr_field(j["girth_log"], s.map.source.dim(), origin + ".girth_log");

    const Json& jr = detail::require_field(j, "declared_rank", origin);
    if (!jr.is_number_integer() || jr.get<int>() < 0)
        throw SchemaError(origin + ".declared_rank: expected a non-negative integer");
    s.map.declared_rank = jr.get<int>();

    s.seed = detail::require_field(j, "seed", origin).get<std::uint64_t>();
    s.samples = detail::require_field(j, "samples", origin).get<int>();
    if (s.samples < 1) throw SchemaError(origin + ".samples: expected a positive count");

    if (j.contains("tolerances") && !j["tolerances"].is_null()) {
        const Json& jt = j["tolerances"];
        if (jt.contains("structure")) s.tols.structure = jt["structure"].get<double>();
        if (jt.contains("rank")) s.tols.rank = jt["rank"].get<double>();
        if (jt.contains("lemma")) s.tols.lemma = jt["lemma"].get<double>();
        if (jt.contains("theorem")) s.tols.theorem = jt["theorem"].get<double>();
        if (jt.contains("trace")) s.tols.trace = jt["trace"].get<double>();
    }

    if (j.contains("flags") && !j["flags"].is_null())
        for (const auto& fl : j["flags"]) s.notes.push_back(fl.get<std::string>());
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open scenario file '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("invalid JSON in '" + path + "': " + e.what());
    }
    return scenario_from_json(j, path);
}

namespace detail {

inline Json manifold_to_json(const ManifoldSpec& m) {
    Json j;
    j["dim"] = m.dim();
    Json metric = Json::array();
    for (const auto& row : m.metric_exprs()) {
        Json jrow = Json::array();
        for (const auto& e : row) jrow.push_back(e.to_string());
        metric.push_back(jrow);
    }
    j["metric"] = metric;
    Json lo = Json::array(), hi = Json::array();
    for (Eigen::Index i = 0; i < m.domain().lo.size(); ++i) {
        lo.push_back(m.domain().lo[i]);
        hi.push_back(m.domain().hi[i]);
    }
    j["domain"] = Json{{"min", lo}, {"max", hi}};
    return j;
}

} // namespace detail

// JSON form of a bundled fixture; `fixtures emit` writes exactly this.
inline Json fixture_to_json(const Fixture& f) {
    Json j;
    j["name"] = f.name;
    j["source"] = detail::manifold_to_json(f.map.source);
    j["target"] = detail::manifold_to_json(f.map.target);
    Json comps = Json::array();
    for (const auto& e : f.map.components) comps.push_back(e.to_string());
    j["map"] = comps;
    if (f.structure) {
        Json js = Json::array();
        for (const auto& row : f.structure->components()) {
            Json jrow = Json::array();
            for (const auto& e : row) jrow.push_back(e.to_string());
            js.push_back(jrow);
        }
        j["complex_structure"] = js;
    }
    if (f.girth_log) j["girth_log"] = f.girth_log->to_string();
    j["declared_rank"] = f.map.declared_rank;
    j["seed"] = f.seed;
    j["samples"] = f.samples;
    if (!f.notes.empty()) {
        Json fl = Json::array();
        for (const auto& n : f.notes) fl.push_back(n);
        j["flags"] = fl;
    }
    return j;
}

inline Scenario scenario_from_fixture(const std::string& name) {
    return scenario_from_json(fixture_to_json(fixtures::by_name(name)), "fixture:" + name);
}

} // namespace rmap
