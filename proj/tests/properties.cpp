#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "fixtures.hpp"

using namespace swing;

namespace props {

namespace {

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// Worst-case tracker for "value <= tol" style invariants.
struct Worst {
    double value = 0.0;
    bool failed = false;
    void add(double v, double tol) {
        if (!(v <= tol)) failed = true;  // NaN fails too
        if (std::isnan(v) || v > value) value = v;
    }
};

struct Draw {
    PreFault pf;
    NetworkState net;
    InitialState init;
    SwingSystem sys;
    AnalyticSolution sol;
};

// Load drop at the last bus, initialized and solved; nullopt if the power flow fails.
std::optional<Draw> make_draw(const RawCase& raw, int load_bus, double factor) {
    try {
        Draw d;
        d.pf = initialize(build_network_model(raw));
        d.net = prepare_network(apply_disturbance(d.pf.model, fx::load_scale(load_bus, factor)));
        d.init = post_disturbance_state(d.pf.op, d.net);
        d.sys = assemble_system(d.net.model, d.net.vmap, d.init.O, d.init.O_tilde);
        d.sol = solve_analytic(d.sys, d.init.z, 1.0, d.net.vmap);
        return d;
    } catch (const NumericalError&) {
        return std::nullopt;
    }
}

Vec machine_E(const NetworkModel& m) {
    Vec E(m.NI);
    for (int i = 0; i < m.NI; ++i) E(i) = m.units[i].E;
    return E;
}

}  // namespace

std::vector<Result> run_all(unsigned seed, int draws) {
    std::mt19937 rng(seed);
    std::vector<Draw> cases;
    if (auto d = make_draw(fx::ieee9(), 8, 0.9)) cases.push_back(std::move(*d));
    int failed_pf = 0;
    for (int k = 0; k < draws; ++k) {
        const int ng = 2 + static_cast<int>(rng() % 7);
        const int nb = ng + 2 + static_cast<int>(rng() % 4);
        const RawCase raw = fx::random_case(rng, ng, nb);
        if (auto d = make_draw(raw, nb, 0.9)) cases.push_back(std::move(*d));
        else ++failed_pf;
    }

    std::vector<Result> out;
    auto report = [&](const std::string& name, const Worst& w, double tol) {
        out.push_back({name, !w.failed && cases.size() > 1,
                       fmt("worst %.3g (tol %.1g)", w.value, tol) + ", " + std::to_string(cases.size()) + " systems"});
    };

    {
        Worst w;
        for (const auto& c : cases)
            for (const auto& P : c.sol.basis.psi)
                w.add(sylvester_residual(c.sys.T, c.sol.spectrum.D, P) / (c.sys.T.norm() * P.norm()), 1e-10);
        report("Sylvester residual ||Psi D - T Psi|| / (||T|| ||Psi||)", w, 1e-10);
    }
    {
        Worst w;
        const double h = 1e-5;
        for (const auto& c : cases)
            for (double t : {1.05, 1.3, 2.0}) {
                const Vec fd = (evaluate_z(c.sol, t + h) - evaluate_z(c.sol, t - h)) / (2 * h);
                const Vec rhs = c.sys.T * evaluate_z(c.sol, t) + c.sys.b;
                w.add((fd - rhs).norm() / std::max(1.0, rhs.norm()), 1e-6);
            }
        report("ODE residual of the closed form (central difference)", w, 1e-6);
    }
    {
        Worst w;
        for (const auto& c : cases)
            w.add((evaluate_z(c.sol, c.sol.t_origin) - c.init.z).norm() / std::max(1.0, c.init.z.norm()), 1e-8);
        report("initial-condition fit z(t0) = z0", w, 1e-8);
    }
    {
        Worst w;
        for (const auto& c : cases) {
            const Mat& R = c.net.vmap.R;
            w.add((R.transpose() * R - Mat::Identity(R.cols(), R.cols())).norm(), 1e-12);
        }
        report("loss-frame rotation R^T R = I", w, 1e-12);
    }
    {
        Worst w;
        ValidityConfig cfg;
        for (const auto& c : cases) {
            const Vec E = machine_E(c.net.model);
            Vec z = evaluate_z(c.sol, 2.0);
            // push the magnitudes off the constraint surface
            z.head(2 * c.sys.NI) *= 1.03;
            const ReinitResult r = consistent_reinit(c.net, c.sys, z, cfg);
            w.add(constraint_residual(r.z, E), 1e-10);
        }
        report("consistent reinitialization constraint residual", w, 1e-10);
    }
    {
        Worst w;
        std::normal_distribution<double> N(0.0, 1.0);
        for (const auto& c : cases) {
            const int NI = c.net.model.NI;
            Vec M(NI), d(NI), om(NI);
            for (int i = 0; i < NI; ++i) {
                M(i) = c.net.model.units[i].M;
                d(i) = N(rng);
                om(i) = N(rng);
            }
            const CoiFrame f = coi_frame(M, d, om);
            w.add(std::max(std::abs(M.dot(f.delta_rel)), std::abs(M.dot(f.omega_rel))) / M.sum(), 1e-10);
        }
        report("COI-relative sums vanish", w, 1e-10);
    }
    {
        // Lossless reactive network with damping: the classical energy never increases.
        Worst w;
        int used = 0;
        for (int k = 0; k < 10; ++k) {
            const int ng = 2 + static_cast<int>(rng() % 7);
            const RawCase raw = fx::random_case(rng, ng, ng + 3, true);
            PreFault pf;
            try {
                pf = initialize(build_network_model(raw));
            } catch (const NumericalError&) {
                continue;
            }
            const NetworkModel& m = pf.model;
            const int NI = m.NI;
            Vec E(NI), M(NI), Pm(NI);
            for (int i = 0; i < NI; ++i) {
                E(i) = m.units[i].E;
                M(i) = m.units[i].M;
                Pm(i) = *m.units[i].p_mech;
            }
            const CMat Y = reduced_admittance(pf.network);
            DynState s{pf.op.delta, Vec::Zero(NI), pf.op.w_tilde};
            for (int i = 0; i < NI; ++i) s.omega(i) = 0.5 * std::sin(1.0 + i);
            const TdsStage run = rk4_simulate(pf.network, s, 0.0, 3.0, {});
            double prev = lossless_energy(Y, E, M, Pm, run.traj.delta.row(0).transpose(),
                                          run.traj.omega.row(0).transpose());
            for (int r = 1; r < run.traj.rows(); ++r) {
                const double V = lossless_energy(Y, E, M, Pm, run.traj.delta.row(r).transpose(),
                                                 run.traj.omega.row(r).transpose());
                w.add((V - prev) / std::max(1.0, std::abs(V)), 1e-8);
                prev = V;
            }
            ++used;
        }
        out.push_back({"energy non-increasing along damped lossless TDS", !w.failed && used > 0,
                       fmt("worst increase %.3g (tol %.1g)", w.value, 1e-8) + ", " + std::to_string(used) +
                           " systems"});
    }
    {
        const double lam = -1.3;
        auto f = [&](double, const Vec& z) { return Vec(lam * z); };
        const Vec z0 = Vec::Ones(1);
        auto err = [&](double dt) { return std::abs(rk4_integrate(f, z0, 0.0, 2.0, dt)(0) - std::exp(lam * 2.0)); };
        const double ratio = err(0.1) / err(0.05);
        out.push_back({"RK4 error ratio on step halving", std::abs(ratio - 16.0) <= 3.0, fmt("ratio %.3f (16 +- %.0f)", ratio, 3.0)});
    }
    {
        int held = 0, tried = 0;
        for (int k = 0; k < 100; ++k) {
            const int n = 2 + static_cast<int>(rng() % 9);
            const Mat A = fx::random_matrix(rng, n);
            const Mat B = fx::random_matrix(rng, n, 0.05);
            const SplitT s = bauer_fike(A, B);
            if (!s.diagonalizable) continue;
            ++tried;
            held += s.bound_holds();
        }
        out.push_back({"Bauer-Fike bound on random pairs", tried > 0 && held == tried,
                       fmt("%.0f of %.0f diagonalizable pairs", held, tried)});
    }
    if (failed_pf > draws / 2)
        out.push_back({"random power flows solvable", false, std::to_string(failed_pf) + " failures"});
    return out;
}

}  // namespace props
