#include "swing/validity_monitor.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

namespace swing {

void ValidityConfig::validate() const {
    if (!(delta_E > 0 && delta_T > 0 && h > 0 && resolution > 0 && bisection_tol > 0))
        throw ValidationError("validity thresholds, scaling and resolutions must be positive");
    if (max_events < 0 || newton_max_iter <= 0 || sample_chunk <= 0)
        throw ValidationError("validity iteration limits must be positive");
}

ProjectionNorms projection_norms(const Vec& w, const Vec& u, const Vec& E) {
    const Eigen::Index NI = E.size();
    if (w.size() != 2 * NI || u.size() != 2 * NI) throw ValidationError("projection state has wrong dimension");
    ProjectionNorms p;
    p.p_tilde.resize(NI);
    p.v_tilde.resize(NI);
    for (Eigen::Index i = 0; i < NI; ++i) {
        const double x = w(i), y = w(NI + i);
        p.p_tilde(i) = 1.0 - std::hypot(x, y) / E(i);
        p.v_tilde(i) = std::sqrt(std::abs(2.0 * x * u(i) + 2.0 * y * u(NI + i))) / E(i);
    }
    p.delta_con = std::sqrt(p.p_tilde.squaredNorm() + p.v_tilde.squaredNorm());
    p.p_max = NI ? p.p_tilde.cwiseAbs().maxCoeff() : 0.0;
    return p;
}

double epsilon(const SwingSystem& sys, const Vec& O, const Vec& Ot) {
    const double nT = sys.T.norm();
    return nT > 0 ? delta_T_norm(sys, O, Ot) / nT : 0.0;
}

namespace {

Vec machine_E(const NetworkModel& model) {
    Vec E(model.NI);
    for (int i = 0; i < model.NI; ++i) E(i) = model.units[i].E;
    return E;
}

struct Gate {
    bool tripped = false;
    Trigger trigger = Trigger::MagnitudeDrift;
};

Gate check(const Probe& p, const ValidityConfig& cfg) {
    const double o1 = cfg.gate == GateNorm::DeltaCon ? p.O1 : p.p_max;
    if (p.divergent || !std::isfinite(o1) || o1 >= cfg.delta_E) return {true, Trigger::MagnitudeDrift};
    if (!std::isfinite(p.eps) || p.eps >= cfg.delta_T) return {true, Trigger::TDrift};
    return {};
}

}  // namespace

const char* trigger_name(Trigger t) { return t == Trigger::MagnitudeDrift ? "magnitude" : "T-drift"; }

Probe probe(const AnalyticSolution& sol, const SwingSystem& sys, const NetworkModel& model, double t) {
    const AnalyticState s = evaluate(sol, t);
    const int NI = model.NI, ND = model.ND;
    Probe p;
    p.t = t;
    p.divergent = s.divergent;
    const Vec w = s.z.head(2 * NI), u = s.z.segment(2 * NI, 2 * NI);
    const auto m = compute_observations(model, w, u, s.v_km, sys.O0);
    p.O = m.O;
    p.O1 = m.O1;
    p.p_max = m.p_max;
    p.eps = epsilon(sys, m.O, observation_O_loads(model, s.z.tail(2 * ND), s.v_km));
    return p;
}

std::vector<Probe> probe_many(const AnalyticSolution& sol, const SwingSystem& sys, const NetworkModel& model,
                              const std::vector<double>& ts, Exec exec) {
    std::vector<Probe> out(ts.size());
    const long n = static_cast<long>(ts.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long k = 0; k < n; ++k) out[k] = probe(sol, sys, model, ts[k]);
    return out;
}

std::optional<Crossing> locate_boundary(const AnalyticSolution& sol, const SwingSystem& sys,
                                        const NetworkModel& model, double t_end, const ValidityConfig& cfg,
                                        Exec exec) {
    const double t0 = sol.t_origin;
    if (!(t_end > t0)) return std::nullopt;
    const long total = static_cast<long>(std::ceil((t_end - t0) / cfg.resolution - 1e-9));
    double lo = t0, hi = t0;
    std::optional<Probe> hit;
    for (long start = 1; start <= total && !hit; start += cfg.sample_chunk) {
        std::vector<double> ts;
        for (long k = start; k < start + cfg.sample_chunk && k <= total; ++k)
            ts.push_back(std::min(t0 + static_cast<double>(k) * cfg.resolution, t_end));
        const auto probes = probe_many(sol, sys, model, ts, exec);
        for (size_t k = 0; k < probes.size(); ++k) {
            if (check(probes[k], cfg).tripped) {
                hi = ts[k];
                lo = k ? ts[k - 1] : (start > 1 ? t0 + static_cast<double>(start - 1) * cfg.resolution : t0);
                hit = probes[k];
                break;
            }
        }
    }
    if (!hit) return std::nullopt;
    Probe at = *hit;
    while (hi - lo > cfg.bisection_tol) {
        const double mid = 0.5 * (lo + hi);
        Probe p = probe(sol, sys, model, mid);
        if (check(p, cfg).tripped) {
            hi = mid;
            at = p;
        } else {
            lo = mid;
        }
    }
    Crossing c;
    c.tau = hi;
    c.trigger = check(at, cfg).trigger;
    c.at = at;
    return c;
}

double constraint_residual(const Vec& z, const Vec& E) {
    const Eigen::Index NI = E.size();
    double r = 0.0;
    for (Eigen::Index i = 0; i < NI; ++i) {
        const double x = z(i), y = z(NI + i), dx = z(2 * NI + i), dy = z(3 * NI + i);
        r = std::max(r, std::abs(x * x + y * y - E(i) * E(i)));
        r = std::max(r, std::abs(x * dx + y * dy));
    }
    return r;
}

namespace {

// Minimum-norm Gauss-Newton on g(z) = [x^2+y^2-E^2; h (x dx + y dy)].
int newton_project(Vec& z, const Vec& E, const ValidityConfig& cfg) {
    const Eigen::Index NI = E.size();
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
        Vec g(2 * NI);
        Mat J = Mat::Zero(2 * NI, 4 * NI);
        for (Eigen::Index i = 0; i < NI; ++i) {
            const double x = z(i), y = z(NI + i), dx = z(2 * NI + i), dy = z(3 * NI + i);
            g(i) = x * x + y * y - E(i) * E(i);
            g(NI + i) = cfg.h * (x * dx + y * dy);
            J(i, i) = 2 * x;
            J(i, NI + i) = 2 * y;
            J(NI + i, i) = cfg.h * dx;
            J(NI + i, NI + i) = cfg.h * dy;
            J(NI + i, 2 * NI + i) = cfg.h * x;
            J(NI + i, 3 * NI + i) = cfg.h * y;
        }
        if (constraint_residual(z, E) <= cfg.g_tol) return it;
        z.head(4 * NI) -= Eigen::CompleteOrthogonalDecomposition<Mat>(J).solve(g);
    }
    if (constraint_residual(z, E) <= cfg.g_tol) return cfg.newton_max_iter;
    throw NumericalError("consistent initialization did not converge in " + std::to_string(cfg.newton_max_iter) +
                         " iterations; constraint residual " + std::to_string(constraint_residual(z, E)));
}

void staged_project(Vec& z, const Vec& E) {
    const Eigen::Index NI = E.size();
    for (Eigen::Index i = 0; i < NI; ++i) {
        double x = z(i), y = z(NI + i);
        const double r = std::hypot(x, y);
        if (!(r > 0)) throw NumericalError("internal voltage collapsed to the origin; cannot project");
        x *= E(i) / r;
        y *= E(i) / r;
        const double rad = (x * z(2 * NI + i) + y * z(3 * NI + i)) / (E(i) * E(i));
        z(i) = x;
        z(NI + i) = y;
        z(2 * NI + i) -= rad * x;
        z(3 * NI + i) -= rad * y;
    }
}

}  // namespace

ReinitResult consistent_reinit(const NetworkState& net, const SwingSystem& sys, const Vec& z, const ValidityConfig& cfg) {
    const Vec E = machine_E(net.model);
    ReinitResult r;
    r.z = z;
    r.g_before = constraint_residual(z, E);
    if (r.g_before > cfg.g_tol) {
        if (cfg.projection == ProjectionMode::Staged) {
            staged_project(r.z, E);
            r.iterations = 1;
        } else {
            r.iterations = newton_project(r.z, E, cfg);
        }
    }
    r.g_after = constraint_residual(r.z, E);
    if (r.g_after > cfg.g_tol * std::max(1.0, E.squaredNorm()))
        throw NumericalError("projection left constraint residual " + std::to_string(r.g_after));
    std::tie(r.O, r.O_tilde) = observations_at(net, r.z);
    r.sys = with_frozen_O(sys, r.O, r.O_tilde);
    r.f_after = epsilon(r.sys, observations_at(net, r.z).first, r.O_tilde);
    if (r.f_after > cfg.f_tol) throw NumericalError("re-frozen system inconsistent with the projected state");
    return r;
}

Vec propagate_error(const Mat& T, const Mat& dT, const Vec& dz0, const Vec& z0, double dt) {
    return dz0 + dt * (T * dz0) + dt * (dT * z0);
}

const Segment& MonitoredRun::segment_at(double t) const {
    if (segments.empty()) throw ValidationError("monitored run has no segments");
    for (auto it = segments.rbegin(); it != segments.rend(); ++it)
        if (t >= it->t_begin) return *it;
    return segments.front();
}

Vec MonitoredRun::z_at(double t) const { return evaluate_z(segment_at(t).sol, t); }

MonitoredRun run_monitored(const NetworkState& net, const Vec& z0, double t0, double t_end, const ValidityConfig& cfg,
                           const SolveOptions& solve, Exec exec) {
    cfg.validate();
    MonitoredRun run;
    run.net = net;
    const auto [O, Ot] = observations_at(net, z0);
    SwingSystem sys = assemble_system(net.model, net.vmap, O, Ot);
    Segment seg{t0, t_end, sys, solve_analytic(sys, z0, t0, net.vmap, solve)};
    for (const auto& w : seg.sol.warnings) run.warnings.push_back(w);

    double t = t0;
    while (true) {
        auto c = locate_boundary(seg.sol, seg.sys, net.model, t_end, cfg, exec);
        if (!c) break;
        BoundaryEvent ev;
        ev.tau = c->tau;
        ev.trigger = c->trigger;
        ev.O1 = c->at.O1;
        ev.p_max = c->at.p_max;
        ev.eps = c->at.eps;
        ev.z_pre = evaluate_z(seg.sol, c->tau);
        if (!cfg.reinit) {
            run.events.push_back(std::move(ev));
            break;
        }
        if (static_cast<int>(run.events.size()) >= cfg.max_events) {
            run.warnings.push_back("event limit reached at t = " + std::to_string(c->tau) + "; solution left unprojected");
            break;
        }
        if (!(c->tau > t)) throw NumericalError("boundary events are not strictly increasing");
        ReinitResult r = consistent_reinit(net, seg.sys, ev.z_pre, cfg);
        ev.z_post = r.z;
        ev.g_before = r.g_before;
        ev.g_after = r.g_after;
        ev.iterations = r.iterations;
        ev.T_norm = r.sys.T.norm();

        seg.t_end = c->tau;
        run.segments.push_back(std::move(seg));
        seg = Segment{c->tau, t_end, r.sys, solve_analytic(r.sys, r.z, c->tau, net.vmap, solve)};
        for (const auto& w : seg.sol.warnings) run.warnings.push_back(w);
        ev.max_re = seg.sol.spectrum.max_real();
        run.events.push_back(std::move(ev));
        t = c->tau;
    }
    seg.t_end = t_end;
    run.segments.push_back(std::move(seg));
    return run;
}

}  // namespace swing
