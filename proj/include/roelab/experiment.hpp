#pragma once

// End-to-end experiment driver: config, the suite run, CSV tables and the
// JSON summary.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "roelab/chabauty.hpp"
#include "roelab/field.hpp"
#include "roelab/io.hpp"

namespace roelab {

using io::json;

struct Tolerances {
    double strong = 0.05;
    double norm = 0.05;
    double product = 0.1;
    double exact = 1e-6;
};

struct ExperimentConfig {
    TorusSpace space{1, 1.0, 1024};
    ControlFunction control = ControlFunction::linear(0.5);
    std::vector<double> schedule{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
    Point seed{1.0 / 16, 0.0};
    double coarse_target = 0.25;
    std::uint64_t rng_seed = 1;
    std::size_t block_rank = 2;
    /// Band of the random grid operators.
    double band = 0.05;
    std::size_t product_pairs = 3;
    std::size_t isometry_trials = 20;
    Tolerances tol;
    std::string output_dir = "roelab_out";

    void validate() const
    {
        if (schedule.empty()) throw Error("schedule is empty");
        for (std::size_t n = 0; n < schedule.size(); ++n) {
            if (!(schedule[n] > 0.0)) throw Error("schedule radii must be positive");
            if (n > 0 && !(schedule[n] < schedule[n - 1])) throw Error("schedule must be strictly decreasing");
        }
        if (!(tol.strong > 0 && tol.norm > 0 && tol.product > 0 && tol.exact > 0))
            throw Error("tolerances must be positive");
        if (!(coarse_target > 0.0) || !(band >= 0.0)) throw Error("bad coarse target or band");
    }

    json to_json() const
    {
        json ctl = control.kind == ControlFunction::Kind::Linear
                       ? json{{"kind", "linear"}, {"kappa", control.kappa}}
                       : json{{"kind", "power"}, {"kappa", control.kappa}, {"exponent", control.exponent}};
        json sd = json::array();
        for (int k = 0; k < space.dim(); ++k) sd.push_back(seed[static_cast<std::size_t>(k)]);
        return {{"space", io::to_json(space)},
                {"control", ctl},
                {"schedule", schedule},
                {"seed", sd},
                {"coarse_target", coarse_target},
                {"rng_seed", rng_seed},
                {"block_rank", block_rank},
                {"band", band},
                {"product_pairs", product_pairs},
                {"isometry_trials", isometry_trials},
                {"tolerances",
                 {{"strong", tol.strong}, {"norm", tol.norm}, {"product", tol.product}, {"exact", tol.exact}}},
                {"output_dir", output_dir}};
    }

    /// Missing keys keep their defaults.
    static ExperimentConfig from_json(const json& j)
    {
        ExperimentConfig c;
        try {
            if (j.contains("space")) c.space = io::space_from_json(j.at("space"));
            if (j.contains("control")) {
                const auto& k = j.at("control");
                const auto kind = k.value("kind", std::string("linear"));
                if (kind == "linear") c.control = ControlFunction::linear(k.value("kappa", 0.5));
                else if (kind == "power") c.control = ControlFunction::power(k.value("kappa", 0.5), k.value("exponent", 1.0));
                else throw Error("unknown control kind " + kind);
            }
            if (j.contains("schedule")) c.schedule = j.at("schedule").get<std::vector<double>>();
            if (j.contains("seed")) c.seed = io::point_from_json(j.at("seed"));
            c.coarse_target = j.value("coarse_target", c.coarse_target);
            c.rng_seed = j.value("rng_seed", c.rng_seed);
            c.block_rank = j.value("block_rank", c.block_rank);
            c.band = j.value("band", c.band);
            c.product_pairs = j.value("product_pairs", c.product_pairs);
            c.isometry_trials = j.value("isometry_trials", c.isometry_trials);
            if (j.contains("tolerances")) {
                const auto& t = j.at("tolerances");
                c.tol.strong = t.value("strong", c.tol.strong);
                c.tol.norm = t.value("norm", c.tol.norm);
                c.tol.product = t.value("product", c.tol.product);
                c.tol.exact = t.value("exact", c.tol.exact);
            }
            c.output_dir = j.value("output_dir", c.output_dir);
        } catch (const json::exception& e) {
            throw Error(std::string("bad experiment config: ") + e.what());
        }
        c.validate();
        return c;
    }
};

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Table {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <typename... Ts>
    void add(const Ts&... cells)
    {
        rows.push_back({cell(cells)...});
    }

    std::string csv() const
    {
        std::string out;
        auto line = [&out](const std::vector<std::string>& v) {
            for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + v[k];
            out += '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v) { return format_number(v); }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    template <typename I>
        requires std::is_integral_v<I>
    static std::string cell(I v) { return std::to_string(v); }
};

struct Assertion {
    std::string id;
    /// Invariant the check stands for.
    std::string invariant;
    bool passed = false;
    bool skipped = false;
    std::string reason;
};

struct Report {
    std::string experiment = "suite";
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<Table> tables;
    std::vector<Assertion> assertions;

    bool all_passed() const
    {
        for (const auto& a : assertions)
            if (!a.skipped && !a.passed) return false;
        return true;
    }

    const Table& table(const std::string& name) const
    {
        for (const auto& t : tables)
            if (t.name == name) return t;
        throw Error("no table " + name);
    }
    const Assertion& assertion(const std::string& id) const
    {
        for (const auto& a : assertions)
            if (a.id == id) return a;
        throw Error("no assertion " + id);
    }

    json summary() const
    {
        json list = json::array();
        for (const auto& a : assertions) {
            json e = {{"id", a.id}, {"invariant", a.invariant}, {"passed", a.passed}, {"skipped", a.skipped}};
            if (!a.reason.empty()) e["reason"] = a.reason;
            list.push_back(e);
        }
        json files = json::array();
        for (const auto& t : tables) files.push_back(t.name + ".csv");
        return {{"experiment", experiment}, {"config_hash", config_hash}, {"seed", seed},
                {"all_passed", all_passed()}, {"assertions", list}, {"tables", files}};
    }

    void write(const std::string& dir) const
    {
        std::filesystem::create_directories(dir);
        for (const auto& t : tables) {
            std::ofstream out(std::filesystem::path(dir) / (t.name + ".csv"), std::ios::binary);
            if (!out) throw Error("cannot write table " + t.name);
            out << t.csv();
        }
        io::write_file((std::filesystem::path(dir) / "summary.json").string(), summary());
    }
};

/// FNV-1a over the canonical config dump.
inline std::string config_hash(const ExperimentConfig& c)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : c.to_json().dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

namespace detail {

inline GridFunction<double> test_function(const TorusSpace& space)
{
    const double L = space.side();
    return GridFunction<double>::sample(space, [L](const Point& p) { return std::cos(2 * M_PI * p[0] / L); });
}

/// Relative error of cos(2 pi x / L) on V_u against its cell projection.
inline double cell_projection_error(const CellProjection& Q, const std::vector<std::size_t>& cell,
                                    const GridFunction<double>& f)
{
    Vector g = Vector::Zero(f.values().size());
    for (auto i : cell) g[static_cast<Eigen::Index>(i)] = f[i];
    const double base = g.norm();
    if (!(base > 0.0)) return 0.0;
    return (g - Q.apply(g)).norm() / base;
}

} // namespace detail

inline Report run_suite(const ExperimentConfig& cfg)
{
    cfg.validate();
    Report rep;
    rep.config_hash = config_hash(cfg);
    rep.seed = cfg.rng_seed;
    const auto& space = cfg.space;
    const bool single = cfg.schedule.size() < 2;
    const std::string skip_reason = "schedule of length 1";

    auto check = [&](std::string id, std::string invariant, bool ok, bool convergence = false) {
        Assertion a{std::move(id), std::move(invariant), ok, false, ""};
        if (convergence && single) {
            a.skipped = true;
            a.passed = false;
            a.reason = skip_reason;
        }
        rep.assertions.push_back(std::move(a));
    };
    auto stage = [](const char* name, const std::function<void()>& body) {
        try {
            body();
        } catch (const Error& e) {
            throw Error(std::string("stage ") + name + " failed: " + e.what());
        }
    };

    std::vector<DeloneSet> sets;
    stage("delone", [&] {
        Table t{"delone", {"n", "target", "sites", "r_pack", "R_cover", "controlled"}, {}};
        bool controlled = true, separated = true;
        for (std::size_t n = 0; n < cfg.schedule.size(); ++n) {
            sets.push_back(greedy_delone(space, cfg.schedule[n], cfg.seed));
            const auto& D = sets.back();
            const bool c = is_controlled(D, cfg.control);
            controlled = controlled && c;
            separated = separated && D.r_pack() >= D.R_cover();
            t.add(n + 1, cfg.schedule[n], D.size(), D.r_pack(), D.R_cover(), c);
        }
        rep.tables.push_back(std::move(t));
        check("delone.controlled", "r(D_n) >= F(R(D_n)) along the schedule", controlled);
        check("delone.greedy_separation", "farthest-point sets satisfy r(D) >= R(D)", separated);
    });

    stage("chabauty", [&] {
        const auto seq = rho_sequence(space, sets);
        Table t{"chabauty", {"n", "rho", "R_cover", "r_pack"}, {}};
        for (const auto& r : seq.rows) t.add(r.n, r.rho, r.R_cover, r.r_pack);
        rep.tables.push_back(std::move(t));
        check("chabauty.non_increasing", "rho(D_n, X) non-increasing along the schedule", seq.non_increasing, true);
        check("chabauty.covering_bound", "R(D_n) <= rho(D_n, X) + L/(2N)", seq.covering_bound_ok);
    });

    std::vector<Stage> stages;
    stage("pou/gram", [&] {
        Table t{"pou_gram",
                {"n", "sites", "row_sum_error", "support_violations", "plateau_min", "lebesgue_empirical",
                 "lebesgue_bound", "lambda_min", "gram_lower_bound", "lambda_max", "gram_upper_bound",
                 "orthonormality_defect", "idempotence_defect"},
                {}};
        bool pou_ok = true, gram_ok = true, iso_ok = true;
        for (std::size_t n = 0; n < sets.size(); ++n) {
            stages.push_back(make_stage(sets[n]));
            const auto& st = stages.back();
            const auto pr = verify_pou(st.pou);
            const double plateau = pr.min_plateau_value.value_or(1.0);
            pou_ok = pou_ok && pr.max_row_sum_error < 1e-12 && pr.support_violations == 0 &&
                     plateau >= 1 - 1e-12 && pr.lebesgue_ok;
            const double lower = gram_lower_bound(st.pou), upper = gram_upper_bound(st.gram);
            gram_ok = gram_ok && st.gram.lambda_min >= lower - 1e-9 && st.gram.lambda_max <= upper + 1e-9;
            const Matrix P = st.iso.projection();
            const double idem = max_abs(P * P - P);
            const double orth = st.iso.orthonormality_defect();
            iso_ok = iso_ok && orth < 1e-8 && idem < 1e-8;
            t.add(n + 1, st.delone.size(), pr.max_row_sum_error, pr.support_violations, plateau,
                  pr.lebesgue_empirical, pr.lebesgue_bound, st.gram.lambda_min, lower, st.gram.lambda_max, upper,
                  orth, idem);
        }
        rep.tables.push_back(std::move(t));
        check("pou.partition", "sum, support, plateau and Lebesgue-number properties of phi", pou_ok);
        check("gram.bounds", "lower and upper Gram spectrum bounds", gram_ok);
        check("gram.isometry", "U*WU = I and P_D^2 = P_D", iso_ok);
    });

    const auto f = detail::test_function(space);
    stage("strong_convergence", [&] {
        const auto sc = strong_convergence(f, std::span<const Stage>(stages));
        Table t{"strong_convergence", {"n", "R_cover", "error", "witness_error", "bound"}, {}};
        for (const auto& r : sc.rows) t.add(r.n, r.R_cover, r.error, r.witness_error, r.bound);
        rep.tables.push_back(std::move(t));
        check("strong.decreasing", "||f - P_{D_n} f|| strictly decreasing", sc.strictly_decreasing, true);
        check("strong.final", "final projection error below tolerance * ||f||",
              sc.final_error < cfg.tol.strong * f.norm(), true);
        check("strong.bound", "error <= omega_f(2R_n) sqrt(mu(X))", sc.bound_ok);
    });

    std::optional<CellPartition> cells;
    stage("cells", [&] {
        cells = voronoi_cells(greedy_delone(space, cfg.coarse_target, cfg.seed));
        const auto cr = verify_cells(*cells);
        check("cells.partition", "Voronoi cells partition the nodes and contain B_{r/2}(u)",
              cr.partition_exact && cr.inner_ball_ok && cr.outer_ball_ok && cr.cells_nonempty);

        Table t{"cells", {"n", "m_min", "m_max", "projection_error_cell0"}, {}};
        std::vector<std::size_t> mins;
        CellDims last;
        for (std::size_t n = 0; n < stages.size(); ++n) {
            last = cell_dims(stages[n].pou, *cells);
            mins.push_back(last.m_min);
            const auto Q = cell_projection(0, stages[n].pou, *cells);
            t.add(n + 1, last.m_min, last.m_max, detail::cell_projection_error(Q, cells->cells[0], f));
        }
        rep.tables.push_back(std::move(t));

        Table dims{"cell_dims", {"u", "m_u"}, {}};
        for (std::size_t u = 0; u < last.m_u.size(); ++u) dims.add(u, last.m_u[u]);
        rep.tables.push_back(std::move(dims));

        Table bm{"cell_boundary", {"delta", "boundary_mass"}, {}};
        for (std::size_t k = 0; k < cells->deltas.size(); ++k) {
            double mass = 0.0;
            for (const auto& row : cells->boundary_mass) mass += row[k];
            bm.add(cells->deltas[k], mass);
        }
        rep.tables.push_back(std::move(bm));

        auto first = std::find_if(mins.begin(), mins.end(), [](std::size_t m) { return m > 0; });
        bool increasing = first != mins.end();
        for (auto it = first; increasing && it + 1 < mins.end(); ++it) increasing = *(it + 1) > *it;
        check("cells.dims_increasing", "m_min(n) strictly increasing once positive", increasing, true);
    });

    std::mt19937_64 rng(cfg.rng_seed);
    const auto trunc_basis = BlockRank::dirichlet(*cells, cfg.block_rank);
    const auto S_cos = truncate_k(GridOperator::multiplication(f), trunc_basis);

    stage("roe", [&] {
        Table iso{"beta_alpha", {"n", "R_cover", "max_defect"}, {}};
        bool ba_ok = true;
        for (std::size_t n = 0; n < stages.size(); ++n) {
            const auto& st = stages[n];
            const double band = 2 * std::max(st.delone.R_cover(), space.step());
            double worst = 0.0;
            for (std::size_t k = 0; k < cfg.isometry_trials; ++k) {
                const auto T = random_banded(st.delone, band, rng);
                worst = std::max(worst, max_abs(beta(st.iso, alpha(st.iso, T)).M - T.M));
            }
            ba_ok = ba_ok && worst < 1e-10;
            iso.add(n + 1, st.delone.R_cover(), worst);
        }
        rep.tables.push_back(std::move(iso));
        check("roe.beta_alpha", "beta(alpha(T)) = T for random banded T", ba_ok);

        const auto dt = alpha_beta_defect_adapted(stages, GridOperator::multiplication(f), *cells, cfg.block_rank);
        Table d{"roe_defect", {"n", "R_cover", "m_n", "value"}, {}};
        bool any_exact = false;
        for (const auto& r : dt.rows) {
            d.add(r.n, r.R_cover, r.m_n, r.value);
            any_exact = any_exact || r.m_n > cfg.block_rank;
        }
        rep.tables.push_back(std::move(d));
        check("roe.reconstruction_exact", "alpha beta(T) = T once m^n exceeds the block rank",
              dt.exact_ok && any_exact, true);
        check("roe.defect_decreasing_before", "reconstruction defect weakly decreasing before m^n exceeds the rank",
              dt.decreasing_before, true);

        Table p{"roe_product", {"pair", "n", "R_cover", "value"}, {}};
        bool prod_ok = true;
        for (std::size_t k = 0; k < cfg.product_pairs; ++k) {
            auto R = truncate_k(random_banded(space, cfg.band, rng), trunc_basis);
            auto S = truncate_k(random_banded(space, cfg.band, rng), trunc_basis);
            R.M /= R.norm();
            S.M /= S.norm();
            const auto rows = multiplicativity_defect(stages, R, S);
            for (const auto& r : rows) p.add(k, r.n, r.R_cover, r.value);
            prod_ok = prod_ok && rows.back().value < cfg.tol.product;
        }
        rep.tables.push_back(std::move(p));
        check("roe.product_final", "beta(RS) - beta(R)beta(S) small at the finest step", prod_ok, true);

        const auto nc = norm_convergence(stages, S_cos);
        Table nt{"roe_norms", {"n", "R_cover", "beta_norm", "compressed_norm", "gap"}, {}};
        for (const auto& r : nc.rows) nt.add(r.n, r.R_cover, r.beta_norm, r.compressed_norm, r.gap);
        rep.tables.push_back(std::move(nt));
        check("roe.norm_identity", "||beta(S)|| = ||P S P|| at every step", nc.identity_ok);
        check("roe.norm_final", "| ||beta^{D_n}(S)|| - ||S|| | below tolerance at the finest step",
              nc.final_gap < cfg.tol.norm * nc.source_norm, true);
    });

    stage("field", [&] {
        const auto sec = section(S_cos, stages);
        const auto prof = norm_profile(sec, cfg.tol.norm);
        Table t{"field_profile", {"t", "fiber_norm", "continuity_gap"}, {}};
        for (const auto& r : prof.rows) t.add(r.t == 0 ? std::string("inf") : std::to_string(r.t), r.fiber_norm, r.continuity_gap);
        rep.tables.push_back(std::move(t));
        check("field.contraction", "fiber norms bounded by ||S||", prof.contraction_ok);
        check("field.finest_gap", "continuity gap at the finest step below tolerance", prof.finest_gap_ok, true);

        // Pure ideal section supported on the first min(2, n_max) fibers.
        auto J = section(GridOperator::zero(space), stages);
        for (std::size_t n = 1; n <= std::min<std::size_t>(2, stages.size()); ++n) {
            const auto& D = stages[n - 1].delone;
            J = add_ideal(std::move(J), n, random_banded(D, space.diameter(), rng).M);
        }
        const auto jp = norm_profile(J, cfg.tol.norm);
        Table jt{"field_ideal", {"t", "fiber_norm"}, {}};
        for (const auto& r : jp.rows) jt.add(r.t == 0 ? std::string("inf") : std::to_string(r.t), r.fiber_norm);
        rep.tables.push_back(std::move(jt));
        check("field.ideal_tail", "ideal sections vanish beyond their support", jp.tail_zero.value_or(false), true);

        auto R = truncate_k(random_banded(space, cfg.band, rng), trunc_basis);
        R.M /= R.norm();
        const auto bR = section(R, stages);
        auto bS_pert = add_ideal(sec, 1, Matrix::Identity(static_cast<Eigen::Index>(stages[0].delone.size()),
                                                          static_cast<Eigen::Index>(stages[0].delone.size())));
        const std::vector<FieldSection> secs{bR, sec, std::move(bS_pert)};
        const auto ax = field_axioms_check(secs, stages);
        Table at{"field_product", {"n", "R_cover", "value"}, {}};
        for (const auto& r : ax.product_defect) at.add(r.n, r.R_cover, r.value);
        rep.tables.push_back(std::move(at));
        check("field.faithful", "distinct sections differ at some fiber", ax.faithful);
        check("field.product_final", "(b_R b_S)_n - (b_RS)_n small at the finest step",
              ax.product_defect.back().value < cfg.tol.product * R.norm() * S_cos.norm(), true);
    });

    return rep;
}

} // namespace roelab
