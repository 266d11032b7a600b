// roelab command line: generation, inspection and the experiment suite.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "roelab.hpp"

using namespace roelab;

namespace {

struct SpaceOpts {
    std::string file;
    int dim = 1;
    double side = 1.0;
    int grid_n = 1024;

    void attach(CLI::App* app)
    {
        app->add_option("--space", file, "space config JSON (overrides --dim/--side/--grid-n)");
        app->add_option("--dim", dim, "torus dimension");
        app->add_option("--side", side, "torus side length");
        app->add_option("--grid-n", grid_n, "grid nodes per axis");
    }
    TorusSpace make() const { return file.empty() ? TorusSpace(dim, side, grid_n) : io::space_from_json(io::read_file(file)); }
};

Point parse_point(const std::vector<double>& v)
{
    if (v.empty() || v.size() > kMaxDim) throw Error("a point has 1 or 2 coordinates");
    Point p{0.0, 0.0};
    for (std::size_t k = 0; k < v.size(); ++k) p[k] = v[k];
    return p;
}

std::vector<Stage> stages_of(const ExperimentConfig& cfg)
{
    std::vector<Stage> out;
    for (double t : cfg.schedule) out.push_back(make_stage(greedy_delone(cfg.space, t, cfg.seed)));
    return out;
}

void print_rows(const std::vector<ValueRow>& rows)
{
    Table t{"", {"n", "R_cover", "value"}, {}};
    for (const auto& r : rows) t.add(r.n, r.R_cover, r.value);
    std::cout << t.csv();
}

int roe_command(const std::string& what, const std::string& config_path)
{
    const auto cfg = ExperimentConfig::from_json(io::read_file(config_path));
    const auto stages = stages_of(cfg);
    const auto C = voronoi_cells(greedy_delone(cfg.space, cfg.coarse_target, cfg.seed));
    const auto f = GridFunction<double>::sample(
        cfg.space, [L = cfg.space.side()](const Point& p) { return std::cos(2 * M_PI * p[0] / L); });
    const auto S = truncate_k(GridOperator::multiplication(f), BlockRank::dirichlet(C, cfg.block_rank));
    std::mt19937_64 rng(cfg.rng_seed);

    std::vector<ValueRow> rows;
    if (what == "alpha") {
        // Multiplicativity error of alpha on random banded site operators.
        for (std::size_t n = 0; n < stages.size(); ++n) {
            const auto& st = stages[n];
            const double band = 2 * std::max(st.delone.R_cover(), cfg.space.step());
            const auto T = random_banded(st.delone, band, rng);
            const auto U = random_banded(st.delone, band, rng);
            const FinitePropOperator TU(st.delone, T.M * U.M);
            const double e = max_abs((alpha(st.iso, T) * alpha(st.iso, U)).M - alpha(st.iso, TU).M);
            rows.push_back({n + 1, st.delone.R_cover(), e});
        }
    } else if (what == "beta") {
        for (std::size_t n = 0; n < stages.size(); ++n)
            rows.push_back({n + 1, stages[n].delone.R_cover(), beta(stages[n].iso, S).norm()});
    } else if (what == "defect") {
        const auto t = alpha_beta_defect_adapted(stages, GridOperator::multiplication(f), C, cfg.block_rank);
        for (const auto& r : t.rows) rows.push_back({r.n, r.R_cover, r.value});
    } else {
        const auto nc = norm_convergence(stages, S);
        for (const auto& r : nc.rows) rows.push_back({r.n, r.R_cover, r.gap});
    }
    print_rows(rows);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Delone sets, partitions of unity and Roe-algebra experiments on the flat torus"};
    app.require_subcommand(1);

    // delone gen
    auto* delone = app.add_subcommand("delone", "Delone set generation");
    delone->require_subcommand(1);
    auto* gen = delone->add_subcommand("gen", "farthest-point Delone set");
    SpaceOpts gen_space;
    gen_space.attach(gen);
    double target_r = 0.125;
    std::vector<double> seed{0.0};
    std::string gen_out;
    gen->add_option("--target-r", target_r, "target covering radius")->required();
    gen->add_option("--seed", seed, "seed point coordinates, x or x,y")->delimiter(',');
    gen->add_option("--out", gen_out, "output point-set JSON");
    gen->callback([&] {
        const auto D = greedy_delone(gen_space.make(), target_r, parse_point(seed));
        if (!gen_out.empty()) io::write_file(gen_out, io::to_json(D));
        std::printf("sites=%zu r=%.17g R=%.17g\n", D.size(), D.r_pack(), D.R_cover());
    });

    // chabauty rho / net
    auto* chab = app.add_subcommand("chabauty", "the metric rho and eps-nets");
    chab->require_subcommand(1);
    auto* rho_cmd = chab->add_subcommand("rho", "rho between two point sets (second defaults to X)");
    std::string rho_a, rho_b;
    rho_cmd->add_option("--a", rho_a, "point-set JSON")->required();
    rho_cmd->add_option("--b", rho_b, "point-set JSON");
    rho_cmd->callback([&] {
        const auto A = io::delone_from_json(io::read_file(rho_a));
        const auto target = rho_b.empty() ? A.space().nodes() : io::delone_from_json(io::read_file(rho_b)).points();
        const auto r = rho(A.space(), A.points(), target);
        std::printf("rho=%.17g raw=%.17g\n", r.value, r.raw);
    });
    auto* seq_cmd = chab->add_subcommand("seq", "rho(D_n, X) along the configured schedule");
    std::string seq_config;
    seq_cmd->add_option("--config", seq_config, "experiment config JSON")->required();
    seq_cmd->callback([&] {
        const auto cfg = ExperimentConfig::from_json(io::read_file(seq_config));
        std::vector<DeloneSet> sets;
        for (double t : cfg.schedule) sets.push_back(greedy_delone(cfg.space, t, cfg.seed));
        const auto rs = rho_sequence(cfg.space, sets);
        Table t{"", {"n", "rho", "R_cover", "r_pack"}, {}};
        for (const auto& r : rs.rows) t.add(r.n, r.rho, r.R_cover, r.r_pack);
        std::cout << t.csv();
    });

    auto* net_cmd = chab->add_subcommand("net", "eps-net coverage of point sets");
    double eps = 0.5;
    std::string net_dir;
    std::vector<std::string> net_sets;
    net_cmd->add_option("--eps", eps, "net scale in (0,1]")->required();
    auto* dir_opt = net_cmd->add_option("--candidates", net_dir, "directory of point-set JSON files")
                        ->check(CLI::ExistingDirectory);
    auto* sets_opt = net_cmd->add_option("--sets", net_sets, "point-set JSON files");
    dir_opt->excludes(sets_opt);
    net_cmd->callback([&] {
        if (!net_dir.empty()) {
            for (const auto& e : std::filesystem::directory_iterator(net_dir))
                if (e.path().extension() == ".json") net_sets.push_back(e.path().string());
            std::sort(net_sets.begin(), net_sets.end());
        }
        if (net_sets.empty()) throw Error("no candidate point sets given");
        std::vector<std::vector<Point>> cands;
        std::optional<TorusSpace> space;
        for (const auto& p : net_sets) {
            const auto D = io::delone_from_json(io::read_file(p));
            if (space && !(*space == D.space())) throw Error("point sets live on different spaces");
            space = D.space();
            cands.push_back(D.points());
        }
        const auto net = epsilon_net(*space, eps, cands);
        std::printf("dense_set=%zu net=%zu all_covered=%d\n", net.dense_set.size(), net.net.size(),
                    net.all_covered ? 1 : 0);
        std::cout << "set,net_index,distance\n";
        for (std::size_t k = 0; k < net.coverage.size(); ++k)
            std::cout << k << ',' << net.coverage[k].net_index << ',' << format_number(net.coverage[k].distance) << '\n';
    });

    // pou build
    auto* pou = app.add_subcommand("pou", "partition of unity");
    pou->require_subcommand(1);
    auto* pou_build = pou->add_subcommand("build", "build and verify phi for a point set");
    std::string pou_in, pou_out;
    pou_build->add_option("--delone", pou_in, "point-set JSON")->required();
    pou_build->add_option("--out", pou_out, "output partition JSON");
    pou_build->callback([&] {
        const auto P = build_pou(io::delone_from_json(io::read_file(pou_in)));
        if (!pou_out.empty()) io::write_file(pou_out, io::to_json(P));
        const auto rep = verify_pou(P);
        std::printf("row_sum_error=%.3g support_violations=%zu lipschitz_max=%.6g lebesgue=%.6g bound=%.6g%s\n",
                    rep.max_row_sum_error, rep.support_violations, rep.lipschitz_max, rep.lebesgue_empirical,
                    rep.lebesgue_bound, P.coarse_grid_warning ? " warning=coarse-grid" : "");
    });

    // gram build
    auto* gram_cmd = app.add_subcommand("gram", "Gram matrix and isometry");
    gram_cmd->require_subcommand(1);
    auto* gram_build = gram_cmd->add_subcommand("build", "Gram spectrum, bounds and isometry defects");
    std::string gram_pou, gram_delone, gram_dump;
    auto* pou_opt = gram_build->add_option("--pou", gram_pou, "partition JSON from `pou build`");
    auto* del_opt = gram_build->add_option("--delone", gram_delone, "point-set JSON, partition built on the fly");
    pou_opt->excludes(del_opt);
    gram_build->add_option("--dump", gram_dump, "write G as a JSON matrix");
    gram_build->callback([&] {
        if (gram_pou.empty() == gram_delone.empty()) throw Error("give exactly one of --pou and --delone");
        const auto P = gram_pou.empty() ? build_pou(io::delone_from_json(io::read_file(gram_delone)))
                                        : io::pou_from_json(io::read_file(gram_pou));
        const auto g = gram(P);
        const auto I = isometry(P, g);
        const Matrix Pd = I.projection();
        if (!gram_dump.empty()) io::write_file(gram_dump, io::matrix_to_json(g.G));
        std::printf("lambda_min=%.17g lower_bound=%.17g lambda_max=%.17g upper_bound=%.17g condition=%.6g\n",
                    g.lambda_min, gram_lower_bound(P), g.lambda_max, gram_upper_bound(g), g.condition());
        std::printf("orthonormality_defect=%.3g idempotence_defect=%.3g\n", I.orthonormality_defect(),
                    max_abs(Pd * Pd - Pd));
    });

    // cells build
    auto* cells_cmd = app.add_subcommand("cells", "Voronoi cells");
    cells_cmd->require_subcommand(1);
    auto* cells_build = cells_cmd->add_subcommand("build", "cell assignment, optional dims against a finer set");
    std::string cells_in, cells_fine, cells_out;
    cells_build->add_option("--delone", cells_in, "coarse point-set JSON")->required();
    cells_build->add_option("--fine", cells_fine, "fine point-set JSON for m_u");
    cells_build->add_option("--out", cells_out, "output cell JSON");
    cells_build->callback([&] {
        const auto C = voronoi_cells(io::delone_from_json(io::read_file(cells_in)));
        if (!cells_out.empty()) io::write_file(cells_out, io::to_json(C));
        const auto rep = verify_cells(C);
        std::printf("cells=%zu min_size=%zu partition_exact=%d inner_ball_ok=%d\n", C.cells.size(),
                    C.min_cell_size(), rep.partition_exact ? 1 : 0, rep.inner_ball_ok ? 1 : 0);
        if (!cells_fine.empty()) {
            const auto dims = cell_dims(build_pou(io::delone_from_json(io::read_file(cells_fine))), C);
            std::cout << "u,m_u\n";
            for (std::size_t u = 0; u < dims.m_u.size(); ++u) std::cout << u << ',' << dims.m_u[u] << '\n';
        }
    });

    // roe alpha|beta|defect|norms
    auto* roe = app.add_subcommand("roe", "alpha/beta tables along the configured schedule");
    std::string roe_what, roe_config;
    roe->add_option("table", roe_what, "alpha | beta | defect | norms")
        ->required()
        ->check(CLI::IsMember({"alpha", "beta", "defect", "norms"}));
    roe->add_option("--config", roe_config, "experiment config JSON")->required();
    roe->callback([&] { roe_command(roe_what, roe_config); });

    // field run
    auto* field = app.add_subcommand("field", "sections of the continuous field");
    field->require_subcommand(1);
    auto* field_run = field->add_subcommand("run", "norm profile of b_S");
    std::string field_schedule, field_op;
    field_run->add_option("--schedule", field_schedule, "experiment config JSON with the schedule")->required();
    field_run->add_option("--op", field_op, "grid operator JSON")->required();
    field_run->callback([&] {
        const auto cfg = ExperimentConfig::from_json(io::read_file(field_schedule));
        const auto S = io::grid_operator_from_json(io::read_file(field_op));
        if (!(S.space == cfg.space)) throw Error("operator and schedule live on different spaces");
        const auto prof = norm_profile(section(S, stages_of(cfg)), cfg.tol.norm);
        Table t{"", {"t", "fiber_norm", "continuity_gap"}, {}};
        for (const auto& r : prof.rows)
            t.add(r.t == 0 ? std::string("inf") : std::to_string(r.t), r.fiber_norm, r.continuity_gap);
        std::cout << t.csv();
    });

    // suite
    auto* suite = app.add_subcommand("suite", "run every experiment and write CSVs plus summary.json");
    std::string suite_config, suite_out;
    suite->add_option("--config", suite_config, "experiment config JSON (defaults when omitted)");
    suite->add_option("--out", suite_out, "output directory (overrides the config)");
    int suite_status = 0;
    suite->callback([&] {
        auto cfg = suite_config.empty() ? ExperimentConfig{} : ExperimentConfig::from_json(io::read_file(suite_config));
        if (!suite_out.empty()) cfg.output_dir = suite_out;
        const auto rep = run_suite(cfg);
        rep.write(cfg.output_dir);
        for (const auto& a : rep.assertions)
            std::printf("%-5s %s%s\n", a.skipped ? "SKIP" : (a.passed ? "PASS" : "FAIL"), a.id.c_str(),
                        a.skipped ? (" (" + a.reason + ")").c_str() : "");
        suite_status = rep.all_passed() ? 0 : 1;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return suite_status;
}
