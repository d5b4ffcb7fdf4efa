#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "rmap/clairaut.hpp"
#include "rmap/scenario.hpp"
#include "rmap/version.hpp"

namespace rmap {

struct GeodesicSummary {
    double max_trace_drift = 0.0;
    double max_lemma_vertical = 0.0;
    double max_lemma_horizontal = 0.0;
    double max_theorem2 = 0.0;
    double max_pq_antisymmetry = 0.0;
    double max_c4 = 0.0;
    double max_angle_identity = 0.0; // |g(U,U) + g(X,X) - g(a',a')|
    int checkpoints = 0;
    int trajectories = 0;
    int degenerate = 0;
    bool any_truncated = false;
};

struct AnalysisReport {
    std::string scenario_name;
    std::uint64_t seed = 0;
    std::string scenario_hash;

    bool has_structure = false;
    StructureReport structure;

    Verdict riemannian_verdict = Verdict::NotApplicable;
    RiemannianMapReport riemannian;

    Verdict generic_verdict = Verdict::NotApplicable;
    GenericMapReport generic;

    Verdict fiber_geodesic = Verdict::NotApplicable;
    Verdict fiber_umbilical = Verdict::NotApplicable;
    FiberGeometryReport fiber;
    bool fiber_ran = false;

    Verdict bishop_verdict = Verdict::NotApplicable;
    BishopReport bishop;

    Verdict trace_verdict = Verdict::NotApplicable;
    Verdict lemma_verdict = Verdict::NotApplicable;
    Verdict theorem2_verdict = Verdict::NotApplicable;
    GeodesicSummary geodesics;

    Verdict thm3_verdict = Verdict::NotApplicable;
    Thm3Report thm3;

    CorollaryReport corollary;

    Verdict foliation_verdict = Verdict::NotApplicable;
    FoliationReport foliation;

    std::vector<std::string> flags;
};

namespace detail {

inline void add_flag(AnalysisReport& rep, const std::string& flag) {
    if (std::find(rep.flags.begin(), rep.flags.end(), flag) == rep.flags.end()) rep.flags.push_back(flag);
}

// Checkpoint stride: every 50 integrator steps, at least 20 checkpoints.
inline std::size_t checkpoint_stride(std::size_t n_points) {
    if (n_points <= 20) return 1;
    return std::max<std::size_t>(1, std::min<std::size_t>(50, n_points / 20));
}

inline std::vector<TangentVector> seeded_starts(const Scenario& s, int count) {
    SampleRng rng(s.seed + 0x51a7eull);
    std::vector<TangentVector> starts;
    const auto& box = s.map.source.domain();
    for (int i = 0; i < count; ++i) {
        Vec p = rng.interior_point(box.lo, box.hi, 0.35);
        Vec v = rng.unit_vector(s.map.source.dim());
        starts.push_back({p, v});
    }
    return starts;
}

} // namespace detail

// Full pipeline in dependency order: structure -> riemannian_map -> generic ->
// fiber_geometry -> clairaut. A failed precondition marks downstream stages
// inconclusive instead of fail; a missing ingredient (no J, no girth) marks
// them not-applicable.
inline AnalysisReport run_analysis(const Scenario& s) {
    AnalysisReport rep;
    rep.scenario_name = s.name;
    rep.seed = s.seed;
    rep.scenario_hash = s.hash;
    for (const auto& n : s.notes) detail::add_flag(rep, n);

    const double rank_tol = s.tols.rank;

    // Stage 1: almost-complex / Hermitian / Kahler / nearly-Kahler.
    bool hermitian_ok = false;
    bool nearly_kahler_ok = false;
    if (s.structure) {
        rep.has_structure = true;
        SamplePlan plan;
        plan.seed = s.seed;
        plan.points = std::min(s.samples, 64);
        plan.tol_structure = s.tols.structure;
        rep.structure = check_nearly_kahler(s.map.source, *s.structure, plan);
        hermitian_ok = rep.structure.is_hermitian == Verdict::Pass;
        nearly_kahler_ok = rep.structure.is_nearly_kahler == Verdict::Pass;
    }

    // Stage 2: Riemannian-map condition.
    bool riemannian_ok = false;
    try {
        DecompositionSamplePlan plan;
        plan.seed = s.seed + 1;
        plan.points = std::max(8, s.samples / 4);
        rep.riemannian = check_riemannian_map(s.map, plan, 1e-9, rank_tol);
        rep.riemannian_verdict = rep.riemannian.verdict;
        riemannian_ok = rep.riemannian_verdict == Verdict::Pass;
        if (rep.riemannian.immersion_edge) detail::add_flag(rep, "IsometricImmersionEdge");
        if (rep.riemannian.submersion_edge) detail::add_flag(rep, "RiemannianSubmersionEdge");
    } catch (const VariableRank&) {
        rep.riemannian_verdict = Verdict::Fail;
        detail::add_flag(rep, "VariableRank");
        return rep;
    }

    // Stage 3: generic structure of the fibers.
    if (s.structure) {
        if (hermitian_ok && riemannian_ok) {
            DecompositionSamplePlan plan;
            plan.seed = s.seed + 2;
            plan.points = 16;
            rep.generic = check_generic(s.map, *s.structure, plan, rank_tol);
            rep.generic_verdict = rep.generic.verdict;
        } else {
            rep.generic_verdict = Verdict::Inconclusive;
        }
    }

    const ComplexStructureField* J = s.structure ? &*s.structure : nullptr;
    const bool have_fibers = rep.riemannian.rank >= 0 && rep.riemannian.rank < s.map.source.dim();

    // Stage 4: fiber geometry.
    if (riemannian_ok && have_fibers) {
        FiberGeometryPlan plan;
        plan.seed = s.seed + 3;
        plan.points = std::max(8, std::min(s.samples, 32));
        rep.fiber = fiber_geometry(s.map, J, plan, rank_tol);
        rep.fiber_geodesic = rep.fiber.verdict_geodesic;
        rep.fiber_umbilical = rep.fiber.verdict_umbilical;
        rep.fiber_ran = true;
    } else if (riemannian_ok) {
        rep.fiber_geodesic = Verdict::NotApplicable; // immersion: no fibers
    } else {
        rep.fiber_geodesic = rep.fiber_umbilical = Verdict::Inconclusive;
    }

    // Stage 5: Clairaut analysis.
    if (rep.fiber_ran && s.girth_log) {
        BishopPlan plan;
        plan.seed = s.seed + 4;
        plan.points = std::max(8, std::min(s.samples, 32));
        rep.bishop = bishop_check(s.map, J, GirthSpec{*s.girth_log}, plan, rank_tol);
        rep.bishop_verdict = rep.bishop.verdict;
    }

    if (riemannian_ok && have_fibers) {
        GirthSpec girth{s.girth_log ? *s.girth_log : Expression::constant(0.0, s.map.source.dim())};
        const bool girth_known = s.girth_log.has_value();
        auto starts = detail::seeded_starts(s, 3);
        rep.geodesics.trajectories = static_cast<int>(starts.size());
        for (const auto& start : starts) {
            ClairautTrace trace = geodesic_clairaut_trace(s.map, girth, start, 2.0, 1e-3, rank_tol);
            if (trace.trajectory.truncated) {
                rep.geodesics.any_truncated = true;
                detail::add_flag(rep, "TruncatedTrajectory");
            }
            if (trace.degenerate_horizontal) ++rep.geodesics.degenerate;
            if (girth_known)
                rep.geodesics.max_trace_drift =
                    std::max(rep.geodesics.max_trace_drift, trace.max_relative_drift);

            const auto& traj = trace.trajectory;
            std::size_t stride = detail::checkpoint_stride(traj.size());
            for (std::size_t i = 0; i < traj.size(); i += stride) {
                Vec x = traj.points[i];
                Vec v = traj.velocities[i];
                ++rep.geodesics.checkpoints;

                PointDecomposition d = decompose_at(s.map, J, x, rank_tol);
                double guu = (d.P_vert * v).dot(d.G1 * (d.P_vert * v));
                double gxx = (d.P_horiz * v).dot(d.G1 * (d.P_horiz * v));
                double gvv = v.dot(d.G1 * v);
                rep.geodesics.max_angle_identity =
                    std::max(rep.geodesics.max_angle_identity, std::abs(guu + gxx - gvv));

                if (nearly_kahler_ok) {
                    TangentVector state{x, v};
                    auto [vres, hres] = lemma1_residuals(s.map, *s.structure, state, rank_tol);
                    rep.geodesics.max_lemma_vertical = std::max(rep.geodesics.max_lemma_vertical, vres);
                    rep.geodesics.max_lemma_horizontal = std::max(rep.geodesics.max_lemma_horizontal, hres);
                    if (girth_known) {
                        auto t2 = theorem2_residual(s.map, *s.structure, girth, state, rank_tol);
                        rep.geodesics.max_theorem2 = std::max(rep.geodesics.max_theorem2, t2.residual);
                    }
                    // P/Q antisymmetry and the J(P + Q)(J alpha') = 0 identity.
                    PQSample ab = pq_parts(s.map, *s.structure, v, (d.J * v).eval(), x, rank_tol);
                    PQSample ba = pq_parts(s.map, *s.structure, (d.J * v).eval(), v, x, rank_tol);
                    rep.geodesics.max_pq_antisymmetry =
                        std::max(rep.geodesics.max_pq_antisymmetry,
                                 (ab.P_part + ba.P_part).norm() + (ab.Q_part + ba.Q_part).norm());
                    Vec c4 = d.J * (ab.P_part + ab.Q_part);
                    rep.geodesics.max_c4 = std::max(rep.geodesics.max_c4, c4.norm());
                }
            }
        }

        double speed2 = 1.0; // starts are unit Euclidean; scale tolerance with g-speed
        for (const auto& st : starts)
            speed2 = std::max(speed2, st.components.dot(s.map.source.metric_at(st.base) * st.components));
        const double lemma_tol = s.tols.lemma * (1.0 + speed2);
        const double theorem_tol = s.tols.theorem * (1.0 + speed2);

        if (girth_known)
            rep.trace_verdict =
                rep.geodesics.max_trace_drift <= s.tols.trace ? Verdict::Pass : Verdict::Fail;
        if (s.structure) {
            if (nearly_kahler_ok) {
                rep.lemma_verdict = (rep.geodesics.max_lemma_vertical <= lemma_tol &&
                                     rep.geodesics.max_lemma_horizontal <= lemma_tol)
                                        ? Verdict::Pass
                                        : Verdict::Fail;
                if (girth_known)
                    rep.theorem2_verdict =
                        rep.geodesics.max_theorem2 <= theorem_tol ? Verdict::Pass : Verdict::Fail;
            } else {
                rep.lemma_verdict = Verdict::Inconclusive;
                rep.theorem2_verdict = Verdict::Inconclusive;
            }
        }
    }

    if (s.structure && nearly_kahler_ok && riemannian_ok && have_fibers && s.girth_log) {
        Thm3Plan plan;
        plan.seed = s.seed + 5;
        plan.points = 6;
        plan.tol = s.tols.theorem;
        rep.thm3 = thm3_classify(s.map, *s.structure, GirthSpec{*s.girth_log}, plan, rank_tol);
        rep.thm3_verdict = rep.thm3.satisfied_count > 0 ? Verdict::Pass : Verdict::Fail;

        rep.corollary = corollary_check(s.map, *s.structure, plan,
                                        rep.fiber.verdict_geodesic == Verdict::Pass, rank_tol);

        rep.foliation = foliation_residuals(s.map, *s.structure, plan, rank_tol);
        if (rep.foliation.d1_applicable || rep.foliation.d2_applicable) {
            detail::add_flag(rep, "ReconstructedProposition");
            double worst = std::max(rep.foliation.d1_residual, rep.foliation.d2_residual);
            rep.foliation_verdict = worst <= s.tols.theorem ? Verdict::Pass : Verdict::Fail;
        }
    } else if (s.structure && riemannian_ok && have_fibers && s.girth_log && !nearly_kahler_ok) {
        rep.thm3_verdict = Verdict::Inconclusive;
        rep.foliation_verdict = Verdict::Inconclusive;
    }

    return rep;
}

namespace detail {

inline Json verdict_json(Verdict v) { return Json(to_string(v)); }

} // namespace detail

inline Json report_to_json(const AnalysisReport& rep) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["provenance"] = Json{{"tool_version", kToolVersion},
                           {"seed", rep.seed},
                           {"scenario", rep.scenario_name},
                           {"scenario_hash", rep.scenario_hash}};

    Json js;
    if (rep.has_structure) {
        js["is_almost_complex"] = detail::verdict_json(rep.structure.is_almost_complex);
        js["is_hermitian"] = detail::verdict_json(rep.structure.is_hermitian);
        js["is_kahler"] = detail::verdict_json(rep.structure.is_kahler);
        js["is_nearly_kahler"] = detail::verdict_json(rep.structure.is_nearly_kahler);
        js["max_residuals"] = Json{{"almost_complex", rep.structure.residual_almost_complex},
                                   {"hermitian", rep.structure.residual_hermitian},
                                   {"kahler", rep.structure.residual_kahler},
                                   {"nearly_kahler", rep.structure.residual_nearly_kahler}};
        js["samples_used"] = rep.structure.samples_used;
    } else {
        js["is_almost_complex"] = detail::verdict_json(Verdict::NotApplicable);
        js["is_hermitian"] = detail::verdict_json(Verdict::NotApplicable);
        js["is_kahler"] = detail::verdict_json(Verdict::NotApplicable);
        js["is_nearly_kahler"] = detail::verdict_json(Verdict::NotApplicable);
    }
    j["structure"] = js;

    j["riemannian_map"] = Json{{"verdict", detail::verdict_json(rep.riemannian_verdict)},
                               {"max_residual", rep.riemannian.max_residual},
                               {"rank", rep.riemannian.rank},
                               {"immersion_edge", rep.riemannian.immersion_edge},
                               {"submersion_edge", rep.riemannian.submersion_edge}};

    std::string cls = "generic";
    if (rep.generic.purely_real) cls = "purely-real";
    if (rep.generic.complex_fibers) cls = "complex";
    j["generic"] = Json{{"verdict", detail::verdict_json(rep.generic_verdict)},
                        {"dim_kernel", rep.generic.dim_kernel},
                        {"dim_d1", rep.generic.dim_d1},
                        {"dim_d2", rep.generic.dim_d2},
                        {"dim_mu", rep.generic.dim_mu},
                        {"class", cls}};

    double max_h = 0.0;
    for (const auto& [p, H] : rep.fiber.mean_curvature_samples) max_h = std::max(max_h, H.norm());
    j["fiber_geometry"] = Json{{"verdict_geodesic", detail::verdict_json(rep.fiber_geodesic)},
                               {"verdict_umbilical", detail::verdict_json(rep.fiber_umbilical)},
                               {"max_T_norm", rep.fiber.max_T_norm},
                               {"umbilical_residual", rep.fiber.umbilical_residual},
                               {"max_mean_curvature_norm", max_h}};
    // Without a girth the user needs the sampled H field to propose one; the
    // tool never fits f itself.
    if (rep.bishop_verdict == Verdict::NotApplicable && rep.fiber_ran) {
        Json samples = Json::array();
        for (const auto& [p, H] : rep.fiber.mean_curvature_samples) {
            Json point = Json::array(), hvec = Json::array();
            for (Eigen::Index i = 0; i < p.size(); ++i) point.push_back(p[i]);
            for (Eigen::Index i = 0; i < H.size(); ++i) hvec.push_back(H[i]);
            samples.push_back(Json{{"point", point}, {"H", hvec}});
        }
        j["fiber_geometry"]["mean_curvature_samples"] = samples;
    }

    Json jc;
    jc["bishop"] = Json{{"verdict", detail::verdict_json(rep.bishop_verdict)},
                        {"umbilical_residual", rep.bishop.umbilical_residual},
                        {"gradmatch_residual", rep.bishop.gradmatch_residual}};
    jc["trace"] = Json{{"verdict", detail::verdict_json(rep.trace_verdict)},
                       {"max_relative_drift", rep.geodesics.max_trace_drift},
                       {"trajectories", rep.geodesics.trajectories},
                       {"degenerate", rep.geodesics.degenerate}};
    jc["lemma1"] = Json{{"verdict", detail::verdict_json(rep.lemma_verdict)},
                        {"max_vertical_residual", rep.geodesics.max_lemma_vertical},
                        {"max_horizontal_residual", rep.geodesics.max_lemma_horizontal},
                        {"checkpoints", rep.geodesics.checkpoints}};
    jc["theorem2"] = Json{{"verdict", detail::verdict_json(rep.theorem2_verdict)},
                          {"max_residual", rep.geodesics.max_theorem2}};
    Json alts = Json::array();
    if (rep.thm3.alt_constant_girth) alts.push_back("girth-constant-on-omega-d2");
    if (rep.thm3.alt_one_dim_fibers) alts.push_back("one-dimensional-fibers");
    if (rep.thm3.alt_identity) alts.push_back("pullback-identity");
    jc["theorem3"] = Json{{"verdict", detail::verdict_json(rep.thm3_verdict)},
                          {"alternatives", alts},
                          {"grad_on_omega_d2", rep.thm3.grad_on_omega_d2},
                          {"identity_residual", rep.thm3.identity_residual},
                          {"identity_applicable", rep.thm3.identity_applicable}};
    jc["corollary"] = Json{{"verdict", detail::verdict_json(rep.corollary.applicable)},
                           {"geodesic_side", rep.corollary.geodesic_side},
                           {"pullback_side", rep.corollary.pullback_side},
                           {"max_pullback_norm", rep.corollary.max_pullback_norm},
                           {"sides_agree", rep.corollary.sides_agree}};
    jc["foliation"] = Json{{"verdict", detail::verdict_json(rep.foliation_verdict)},
                           {"d1_residual", rep.foliation.d1_residual},
                           {"d2_residual", rep.foliation.d2_residual},
                           {"d1_direct", rep.foliation.d1_direct},
                           {"d2_direct", rep.foliation.d2_direct},
                           {"d2_condition", "reconstructed from proof"}};
    jc["pq_identities"] = Json{{"max_antisymmetry", rep.geodesics.max_pq_antisymmetry},
                               {"max_c4", rep.geodesics.max_c4},
                               {"max_angle_identity", rep.geodesics.max_angle_identity}};
    j["clairaut"] = jc;

    Json jf = Json::array();
    for (const auto& f : rep.flags) jf.push_back(f);
    j["flags"] = jf;
    return j;
}

inline std::string report_to_text(const AnalysisReport& rep) {
    std::ostringstream out;
    out << "scenario: " << rep.scenario_name << " (seed " << rep.seed << ")\n";
    if (rep.has_structure) {
        out << "structure: almost-complex " << to_string(rep.structure.is_almost_complex) << ", hermitian "
            << to_string(rep.structure.is_hermitian) << ", kahler " << to_string(rep.structure.is_kahler)
            << ", nearly-kahler " << to_string(rep.structure.is_nearly_kahler) << "\n";
    } else {
        out << "structure: not-applicable (no complex structure supplied)\n";
    }
    out << "riemannian_map: " << to_string(rep.riemannian_verdict) << " (rank " << rep.riemannian.rank
        << ", residual " << rep.riemannian.max_residual << ")\n";
    out << "generic: " << to_string(rep.generic_verdict);
    if (rep.generic_verdict == Verdict::Pass)
        out << " (dim ker " << rep.generic.dim_kernel << ", D1 " << rep.generic.dim_d1 << ", D2 "
            << rep.generic.dim_d2 << ", mu " << rep.generic.dim_mu << ")";
    out << "\n";
    out << "fiber_geometry: geodesic " << to_string(rep.fiber_geodesic) << ", umbilical "
        << to_string(rep.fiber_umbilical) << " (max |T| " << rep.fiber.max_T_norm << ")\n";
    out << "bishop: " << to_string(rep.bishop_verdict) << " (umbilical " << rep.bishop.umbilical_residual
        << ", gradmatch " << rep.bishop.gradmatch_residual << ")\n";
    out << "clairaut_trace: " << to_string(rep.trace_verdict) << " (max drift "
        << rep.geodesics.max_trace_drift << ")\n";
    out << "lemma1: " << to_string(rep.lemma_verdict) << " (v " << rep.geodesics.max_lemma_vertical
        << ", h " << rep.geodesics.max_lemma_horizontal << ", checkpoints " << rep.geodesics.checkpoints
        << ")\n";
    out << "theorem2: " << to_string(rep.theorem2_verdict) << " (max residual "
        << rep.geodesics.max_theorem2 << ")\n";
    out << "theorem3: " << to_string(rep.thm3_verdict) << "\n";
    out << "corollary: " << to_string(rep.corollary.applicable);
    if (rep.corollary.applicable == Verdict::Pass)
        out << " (sides " << (rep.corollary.sides_agree ? "agree" : "disagree") << ")";
    out << "\n";
    out << "foliation: " << to_string(rep.foliation_verdict) << " (d1 " << rep.foliation.d1_residual
        << ", d2 " << rep.foliation.d2_residual << ", d2 condition reconstructed from proof)\n";
    out << "flags:\n";
    for (const auto& f : rep.flags) out << "  " << f << "\n";
    return out.str();
}

inline void emit_report(const AnalysisReport& rep, const std::string& format, const std::string& path) {
    std::string payload;
    if (format == "json")
        payload = report_to_json(rep).dump(2) + "\n";
    else if (format == "text")
        payload = report_to_text(rep);
    else
        throw IoError("unknown report format '" + format + "'");
    if (path.empty() || path == "-") {
        std::fputs(payload.c_str(), stdout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << payload;
    if (!out) throw IoError("failed while writing '" + path + "'");
}

// Aggregate exit code: 0 all pass, 1 any fail, 2 inconclusive only, 3 errors
// (thrown before this point).
inline int report_exit_code(const AnalysisReport& rep) {
    std::vector<Verdict> vs = {rep.riemannian_verdict, rep.generic_verdict, rep.fiber_geodesic,
                               rep.fiber_umbilical,    rep.bishop_verdict,  rep.trace_verdict,
                               rep.lemma_verdict,      rep.theorem2_verdict, rep.thm3_verdict,
                               rep.foliation_verdict};
    if (rep.has_structure) {
        vs.push_back(rep.structure.is_almost_complex);
        vs.push_back(rep.structure.is_hermitian);
        vs.push_back(rep.structure.is_nearly_kahler);
    }
    bool any_fail = false, any_inconclusive = false;
    for (Verdict v : vs) {
        if (v == Verdict::Fail) any_fail = true;
        if (v == Verdict::Inconclusive) any_inconclusive = true;
    }
    if (any_fail) return 1;
    if (any_inconclusive) return 2;
    return 0;
}

// One CSV per trajectory: t, coordinates, velocities, sin(theta), the
// Clairaut invariant, and the Lemma 1 / Theorem 2 residuals at checkpoint
// rows (other rows leave those cells empty).
inline std::vector<std::string> trace_geodesics(const Scenario& s, const std::vector<TangentVector>& starts,
                                                double t_end, double step, const std::string& out_dir) {
    std::vector<std::string> written;
    GirthSpec girth{s.girth_log ? *s.girth_log : Expression::constant(0.0, s.map.source.dim())};
    const int m = s.map.source.dim();
    const bool structured = s.structure.has_value();

    for (std::size_t si = 0; si < starts.size(); ++si) {
        if (starts[si].components.norm() == 0.0)
            throw DegenerateStart("geodesic start " + std::to_string(si) + " has zero velocity");
        ClairautTrace trace = geodesic_clairaut_trace(s.map, girth, starts[si], t_end, step, s.tols.rank);
        const auto& traj = trace.trajectory;

        std::string path = out_dir + "/trace_" + std::to_string(si) + ".csv";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + path + "' for writing");

        out << "t";
        for (int i = 1; i <= m; ++i) out << ",x" << i;
        for (int i = 1; i <= m; ++i) out << ",v" << i;
        out << ",sin_theta,clairaut_invariant,lemma1_vres,lemma1_hres,thm2_residual\n";

        std::size_t stride = detail::checkpoint_stride(traj.size());
        char buf[64];
        auto fmt = [&buf](double v) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return std::string(buf);
        };
        for (std::size_t i = 0; i < traj.size(); ++i) {
            out << fmt(traj.times[i]);
            for (int c = 0; c < m; ++c) out << ',' << fmt(traj.points[i][c]);
            for (int c = 0; c < m; ++c) out << ',' << fmt(traj.velocities[i][c]);
            out << ',' << fmt(trace.sin_theta[i]) << ',' << fmt(trace.invariant[i]);
            if (structured && i % stride == 0) {
                TangentVector state{traj.points[i], traj.velocities[i]};
                auto [vres, hres] = lemma1_residuals(s.map, *s.structure, state, s.tols.rank);
                out << ',' << fmt(vres) << ',' << fmt(hres);
                if (s.girth_log) {
                    auto t2 = theorem2_residual(s.map, *s.structure, girth, state, s.tols.rank);
                    out << ',' << fmt(t2.residual);
                } else {
                    out << ',';
                }
            } else {
                out << ",,,";
            }
            out << '\n';
        }
        if (!out) throw IoError("failed while writing '" + path + "'");
        written.push_back(path);
    }
    return written;
}

} // namespace rmap
