#include <iostream>

#include <CLI11.hpp>

#include "swing/cli_io.hpp"

using namespace swing;

namespace {

int exit_code(const std::exception& e) {
    if (dynamic_cast<const InputError*>(&e)) return 1;
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form transient stability analysis"};
    app.require_subcommand(1);

    std::string case_path, dist_path, methods = "analytic,tds,dm,com", out = "swingcart_out";
    double t_end = 0, dt = 0.01, delta_e = 0.10, delta_t = 0.01;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--case", case_path, "case file (swingcart-case JSON)")->required();
        sub->add_option("--disturbances", dist_path, "disturbance script (swingcart-disturbances JSON)");
        sub->add_option("--method", methods, "comma list of analytic,tds,dm,com");
        sub->add_option("--t-end", t_end, "horizon override, s");
        sub->add_option("--dt", dt, "TDS step and sampling interval, s");
        sub->add_option("--delta-e", delta_e, "magnitude-drift threshold");
        sub->add_option("--delta-t", delta_t, "T-drift threshold");
        sub->add_option("--out", out, "output directory (analyze) or file (export)");
    };
    auto* analyze = app.add_subcommand("analyze", "run every selected method and write the report");
    add_common(analyze);
    auto* exp = app.add_subcommand("export", "write one trajectory as CSV");
    add_common(exp);
    std::string which = "analytic";
    exp->add_option("--trajectory", which, "analytic, analytic-noreinit or tds");
    auto* cmp = app.add_subcommand("compare", "compare two exported trajectories");
    std::string a_path, b_path;
    cmp->add_option("a", a_path, "first trajectory CSV")->required();
    cmp->add_option("b", b_path, "second trajectory CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (cmp->parsed()) {
            std::cout << discrepancy_text(compare_trajectories(import_trajectory(a_path), import_trajectory(b_path)));
            return 0;
        }
        ScenarioConfig cfg;
        cfg.case_path = case_path;
        cfg.disturbance_path = dist_path;
        cfg.out_dir = out;
        cfg.options.methods = parse_methods(methods);
        if (t_end > 0) cfg.options.horizon = t_end;
        cfg.options.tds.dt = dt;
        cfg.options.sample_dt = dt;
        cfg.options.validity.delta_E = delta_e;
        cfg.options.validity.delta_T = delta_t;
        if (analyze->parsed()) {
            const Report rep = run_scenario(cfg);
            std::cout << report_text(rep.result);
            for (const auto& f : rep.files) std::cout << "wrote " << f << "\n";
            return 0;
        }
        cfg.write_files = false;
        if (which == "tds") cfg.options.methods = {Method::Tds};
        else if (which == "analytic" || which == "analytic-noreinit") cfg.options.methods = {Method::Analytic};
        else throw ValidationError("--trajectory must be analytic, analytic-noreinit or tds");
        cfg.options.no_reinit_pass = which == "analytic-noreinit";
        const Report rep = run_scenario(cfg);
        const auto& r = rep.result;
        const auto& t = which == "tds" ? r.tds : which == "analytic" ? r.analytic : r.analytic_plain;
        export_trajectory(*t, out);
        std::cout << "wrote " << out << " (" << t->rows() << " rows)\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    }
}
