#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rmap/decomposition.hpp"

namespace rmap {

// One bundled scenario: map, optional complex structure, optional log-girth.
struct Fixture {
    std::string name;
    MapSpec map;
    std::optional<ComplexStructureField> structure;
    std::optional<Expression> girth_log;
    std::uint64_t seed = 42;
    int samples = 64;
    std::vector<std::string> notes;
};

namespace fixtures {

// R^10 -> R^7 with Euclidean metrics and the canonical block J. Kernel is
// 5-dimensional, D1 = 4, D2 = 1, totally geodesic fibers.
inline Fixture example1() {
    Fixture f;
    f.name = "example1";
    f.map.source = ManifoldSpec::euclidean(10, 8.0);
    f.map.target = ManifoldSpec::euclidean(7, 24.0);
    const char* comps[] = {"x2",
                           "x1",
                           "(x3 + x4)/sqrt(2)",
                           "0",
                           "0",
                           "(x8 + x10)/sqrt(2)",
                           "(x7 + x9)/sqrt(2)"};
    for (const char* c : comps) f.map.components.push_back(Expression::parse(c, 10));
    f.map.declared_rank = 5;
    f.structure = ComplexStructureField::canonical(10);
    f.girth_log = Expression::parse("0", 10);
    return f;
}

// R^6 -> R^4, kernel 3-dimensional, D1 = 2, D2 = 1. The span list this
// example was transcribed from repeats one kernel vector; the fixture keeps
// a note about that and uses the Jacobian-derived kernel.
inline Fixture example2() {
    Fixture f;
    f.name = "example2";
    f.map.source = ManifoldSpec::euclidean(6, 8.0);
    f.map.target = ManifoldSpec::euclidean(4, 24.0);
    const char* comps[] = {"(x3 - x4)/sqrt(2)", "x5", "x6", "0"};
    for (const char* c : comps) f.map.components.push_back(Expression::parse(c, 6));
    f.map.declared_rank = 3;
    f.structure = ComplexStructureField::canonical(6);
    f.girth_log = Expression::parse("0", 6);
    f.notes.push_back("ExampleTypoNote");
    return f;
}

inline ManifoldSpec cone_surface() {
    std::vector<std::vector<Expression>> g{
        {Expression::parse("1", 2), Expression::parse("0", 2)},
        {Expression::parse("0", 2), Expression::parse("x1^2", 2)}};
    DomainBox box{(Vec(2) << 0.25, -10.0).finished(), (Vec(2) << 8.0, 10.0).finished()};
    return ManifoldSpec(2, std::move(g), std::move(box));
}

// Surface of revolution g = du^2 + u^2 dv^2 submerging onto the radial line;
// the classical Clairaut setup with girth log(u). No complex structure.
inline Fixture cone() {
    Fixture f;
    f.name = "cone";
    f.map.source = cone_surface();
    f.map.target = ManifoldSpec::euclidean(1, 10.0);
    f.map.components.push_back(Expression::parse("x1", 2));
    f.map.declared_rank = 1;
    f.girth_log = Expression::parse("log(x1)", 2);
    return f;
}

// Product of the cone surface with a flat plane, with a block complex
// structure that pairs (u, v) and (s, t). Each factor is Kahler, so the
// product is Kahler (hence nearly Kahler) with position-dependent J entries.
// F = (u, s, t) leaves one-dimensional fibers with nonzero T, verified girth
// log(u), D1 = 0, D2 = ker, and a two-dimensional mu.
inline Fixture cone_with_j() {
    Fixture f;
    f.name = "cone-with-j";
    std::vector<std::vector<Expression>> g(4);
    const char* entries[4][4] = {{"1", "0", "0", "0"},
                                 {"0", "x1^2", "0", "0"},
                                 {"0", "0", "1", "0"},
                                 {"0", "0", "0", "1"}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g[static_cast<std::size_t>(i)].push_back(Expression::parse(entries[i][j], 4));
    DomainBox box{(Vec(4) << 0.25, -10.0, -6.0, -6.0).finished(),
                  (Vec(4) << 8.0, 10.0, 6.0, 6.0).finished()};
    f.map.source = ManifoldSpec(4, std::move(g), std::move(box));
    f.map.target = ManifoldSpec::euclidean(3, 10.0);
    f.map.components.push_back(Expression::parse("x1", 4));
    f.map.components.push_back(Expression::parse("x3", 4));
    f.map.components.push_back(Expression::parse("x4", 4));
    f.map.declared_rank = 3;

    const char* jrows[4][4] = {{"0", "-x1", "0", "0"},
                               {"1/x1", "0", "0", "0"},
                               {"0", "0", "0", "-1"},
                               {"0", "0", "1", "0"}};
    std::vector<std::vector<Expression>> jc(4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) jc[static_cast<std::size_t>(i)].push_back(Expression::parse(jrows[i][j], 4));
    f.structure = ComplexStructureField(std::vector<std::vector<Expression>>(jc));
    f.girth_log = Expression::parse("log(x1)", 4);
    f.notes.push_back("SyntheticFixture");
    return f;
}

inline std::vector<std::string> names() { return {"example1", "example2", "cone", "cone-with-j"}; }

inline Fixture by_name(const std::string& name) {
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "cone") return cone();
    if (name == "cone-with-j") return cone_with_j();
    throw Error("unknown fixture '" + name + "'");
}

} // namespace fixtures
} // namespace rmap
