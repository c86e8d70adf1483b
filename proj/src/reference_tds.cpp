#include "swing/reference_tds.hpp"

#include <algorithm>
#include <cmath>

#include "swing/cartesian_swing.hpp"

namespace swing {

void TdsConfig::validate() const {
    if (!(dt > 0)) throw ValidationError("TDS time step must be positive");
    if (!(refine_factor > 0 && refine_factor < 1)) throw ValidationError("refine factor must lie in (0, 1)");
}

void Trajectory::append(const Trajectory& o, bool replace_last) {
    if (o.t.empty()) return;
    if (t.empty()) {
        *this = o;
        return;
    }
    const int keep = replace_last ? rows() - 1 : rows();
    t.resize(keep);
    t.insert(t.end(), o.t.begin(), o.t.end());
    auto cat = [&](Mat& a, const Mat& b) {
        Mat c(keep + b.rows(), a.cols());
        c << a.topRows(keep), b;
        a = std::move(c);
    };
    auto catv = [&](Vec& a, const Vec& b) {
        Vec c(keep + b.size());
        c << a.head(keep), b;
        a = std::move(c);
    };
    cat(delta, o.delta);
    cat(omega, o.omega);
    cat(vmag, o.vmag);
    cat(vang, o.vang);
    cat(O, o.O);
    catv(O1, o.O1);
    catv(eps, o.eps);
}

namespace {

CVec internal_voltages(const NetworkModel& m, const Vec& delta, const Vec& delta_t) {
    CVec w(m.n_ibus());
    for (int i = 0; i < m.NI; ++i) w(i) = std::polar(m.units[i].E, delta(i) - m.units[i].gamma);
    for (int j = 0; j < m.ND; ++j) {
        const auto& u = m.units[m.NI + j];
        w(m.NI + j) = std::polar(u.E, delta_t(j) - u.gamma);
    }
    return w;
}

struct Rhs {
    const NetworkState& net;
    Vec pm, inv_M, d_over_M, inv_D;
    int NI, ND;

    explicit Rhs(const NetworkState& n) : net(n), NI(n.model.NI), ND(n.model.ND) {
        const auto& m = n.model;
        pm.resize(NI + ND);
        inv_M.resize(NI);
        d_over_M.resize(NI);
        inv_D.resize(ND);
        for (int k = 0; k < NI + ND; ++k) pm(k) = m.units[k].p_mech.value_or(0.0);
        for (int i = 0; i < NI; ++i) {
            inv_M(i) = 1.0 / m.units[i].M;
            d_over_M(i) = m.units[i].D / m.units[i].M;
        }
        for (int j = 0; j < ND; ++j) inv_D(j) = 1.0 / m.units[NI + j].D;
    }

    // A z: the linear part [omega; -D/M omega; 0]
    Vec linear(const Vec& z) const {
        Vec y = Vec::Zero(z.size());
        y.head(NI) = z.segment(NI, NI);
        y.segment(NI, NI) = -d_over_M.cwiseProduct(z.segment(NI, NI));
        return y;
    }
    // b(z): power imbalance terms, one network solve
    Vec forcing(const Vec& z) const {
        const Vec pe = electrical_power(net, z.head(NI), z.tail(ND));
        Vec y = Vec::Zero(z.size());
        y.segment(NI, NI) = inv_M.cwiseProduct(pm.head(NI) - pe.head(NI));
        y.tail(ND) = inv_D.cwiseProduct(pm.tail(ND) - pe.tail(ND));
        return y;
    }
    Vec f(const Vec& z) const { return linear(z) + forcing(z); }
};

Vec step_appendix(const Rhs& r, const Vec& z, double dt) {
    static constexpr double rk[3] = {0.5, 0.5, 1.0};
    Vec y[4];
    Vec zk = z;
    for (int k = 0; k < 4; ++k) {
        y[k] = r.linear(zk) + r.forcing(zk);
        if (k < 3) zk = z + rk[k] * dt * y[k];
    }
    return z + dt / 6.0 * (y[0] + 2.0 * y[1] + 2.0 * y[2] + y[3]);
}

Vec step_textbook(const std::function<Vec(double, const Vec&)>& f, double t, const Vec& z, double dt) {
    const Vec k1 = f(t, z);
    const Vec k2 = f(t + dt / 2, z + dt / 2 * k1);
    const Vec k3 = f(t + dt / 2, z + dt / 2 * k2);
    const Vec k4 = f(t + dt, z + dt * k3);
    return z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

}  // namespace

Vec electrical_power(const NetworkState& net, const Vec& delta, const Vec& delta_t, CVec* km) {
    const auto& m = net.model;
    const CVec w = internal_voltages(m, delta, delta_t);
    const CVec v = net.vmap.bus_voltages(w);
    if (!v.allFinite()) throw NumericalError("network solve produced non-finite voltages");
    Vec pe(m.n_ibus());
    for (int k = 0; k < m.n_ibus(); ++k) {
        const auto& u = m.units[k];
        const cplx vk = v(u.k);
        pe(k) = u.g * u.E * u.E + u.ymag * (w(k).imag() * vk.real() - w(k).real() * vk.imag());
    }
    if (km) *km = v;
    return pe;
}

Vec rk4_integrate(const std::function<Vec(double, const Vec&)>& f, const Vec& z0, double t0, double t1, double dt) {
    const long n = std::max(1L, std::lround((t1 - t0) / dt));
    const double h = (t1 - t0) / static_cast<double>(n);
    Vec z = z0;
    for (long k = 0; k < n; ++k) z = step_textbook(f, t0 + k * h, z, h);
    return z;
}

TdsStage rk4_simulate(const NetworkState& net, const DynState& s0, double t0, double t_end, const TdsConfig& cfg) {
    cfg.validate();
    if (!(t_end >= t0)) throw ValidationError("TDS end time precedes its start");
    const auto& m = net.model;
    const int NI = m.NI, ND = m.ND;
    const Rhs rhs(net);

    Vec z(2 * NI + ND);
    z.head(NI) = s0.delta;
    z.segment(NI, NI) = s0.omega;
    for (int j = 0; j < ND; ++j) z(2 * NI + j) = std::atan2(s0.w_tilde(ND + j), s0.w_tilde(j)) + m.units[NI + j].gamma;

    const long n = std::lround((t_end - t0) / cfg.dt);
    const long rows = n + 1;
    TdsStage st;
    Trajectory& tr = st.traj;
    tr.source = "tds";
    for (const auto& b : m.raw.buses) tr.bus_ids.push_back(b.id);
    const int nb = static_cast<int>(tr.bus_ids.size());
    tr.delta.resize(rows, NI);
    tr.omega.resize(rows, NI);
    tr.vmag.resize(rows, nb);
    tr.vang.resize(rows, nb);
    tr.O.resize(rows, NI);
    tr.O1 = Vec::Zero(rows);
    tr.eps.resize(rows);

    Vec O0;
    double Tnorm = 1.0;
    SwingSystem sys;
    auto record = [&](long k, const Vec& zz) {
        CVec v;
        electrical_power(net, zz.head(NI), zz.tail(ND), &v);
        const CVec w = internal_voltages(m, zz.head(NI), zz.tail(ND));
        Vec wl(2 * NI);
        for (int i = 0; i < NI; ++i) wl(i) = w(i).real(), wl(NI + i) = w(i).imag();
        const Vec O = observation_O(m, wl, zz.segment(NI, NI), v);
        if (k == 0) {
            O0 = O;
            sys = assemble_system(m, net.vmap, O0);
            Tnorm = sys.T.norm();
        }
        const CVec V = original_bus_voltages(m, v);
        tr.t.push_back(k == n ? t_end : t0 + static_cast<double>(k) * cfg.dt);
        tr.delta.row(k) = zz.head(NI).transpose();
        tr.omega.row(k) = zz.segment(NI, NI).transpose();
        tr.vmag.row(k) = V.cwiseAbs().transpose();
        tr.vang.row(k) = V.unaryExpr([](cplx c) { return std::arg(c); }).real().transpose();
        tr.O.row(k) = O.transpose();
        tr.eps(k) = Tnorm > 0 ? delta_T_norm(sys, O) / Tnorm : 0.0;
    };

    auto f = [&](double, const Vec& zz) { return rhs.f(zz); };
    record(0, z);
    for (long k = 0; k < n; ++k) {
        const double h = (k == n - 1) ? (t_end - t0 - static_cast<double>(k) * cfg.dt) : cfg.dt;
        z = cfg.mode == RkMode::Appendix ? step_appendix(rhs, z, h) : step_textbook(f, t0 + k * cfg.dt, z, h);
        if (!z.allFinite()) throw NumericalError("TDS state became non-finite at t = " + std::to_string(t0 + (k + 1) * cfg.dt));
        record(k + 1, z);
    }
    st.final.delta = z.head(NI);
    st.final.omega = z.segment(NI, NI);
    st.final.w_tilde.resize(2 * ND);
    for (int j = 0; j < ND; ++j) {
        const auto& u = m.units[NI + j];
        st.final.w_tilde(j) = u.E * std::cos(z(2 * NI + j) - u.gamma);
        st.final.w_tilde(ND + j) = u.E * std::sin(z(2 * NI + j) - u.gamma);
    }
    return st;
}

RefinementStudy step_refinement(const NetworkState& net, const DynState& z0, double t0, double t_end,
                                const TdsConfig& cfg) {
    RefinementStudy rs;
    TdsConfig c = cfg;
    Vec prev = rk4_simulate(net, z0, t0, t_end, c).final.delta;
    rs.dts.push_back(c.dt);
    for (int r = 0; r < cfg.max_refinements; ++r) {
        c.dt *= cfg.refine_factor;
        const Vec cur = rk4_simulate(net, z0, t0, t_end, c).final.delta;
        rs.dts.push_back(c.dt);
        const double ch = (cur - prev).cwiseAbs().maxCoeff();
        rs.changes.push_back(ch);
        prev = cur;
        if (ch <= cfg.invariance_tol) {
            rs.converged = true;
            rs.accepted_dt = c.dt / cfg.refine_factor;
            break;
        }
    }
    return rs;
}

namespace {

Vec interp_row(const Trajectory& tr, const Mat& X, double t) {
    const auto it = std::upper_bound(tr.t.begin(), tr.t.end(), t);
    if (it == tr.t.begin()) return X.row(0).transpose();
    if (it == tr.t.end()) return X.row(tr.rows() - 1).transpose();
    const long k = it - tr.t.begin();
    const double t0 = tr.t[k - 1], t1 = tr.t[k];
    const double a = t1 > t0 ? (t - t0) / (t1 - t0) : 1.0;
    return ((1 - a) * X.row(k - 1) + a * X.row(k)).transpose();
}

}  // namespace

Discrepancy compare_trajectories(const Trajectory& a, const Trajectory& b) {
    if (a.t.empty() || b.t.empty()) throw ValidationError("cannot compare an empty trajectory");
    const double lo = std::max(a.t.front(), b.t.front()), hi = std::min(a.t.back(), b.t.back());
    if (lo > hi) throw ValidationError("trajectories have disjoint time ranges");
    if (a.machines() != b.machines()) throw ValidationError("trajectories have different machine counts");
    Discrepancy d;
    double sd = 0, so = 0, sv = 0;
    for (int k = 0; k < a.rows(); ++k) {
        const double t = a.t[k];
        if (t < lo || t > hi) continue;
        const double ed = (a.delta.row(k).transpose() - interp_row(b, b.delta, t)).cwiseAbs().maxCoeff();
        const double eo = (a.omega.row(k).transpose() - interp_row(b, b.omega, t)).cwiseAbs().maxCoeff();
        double ev = 0;
        if (a.vmag.cols() == b.vmag.cols() && a.vmag.cols() > 0)
            ev = (a.vmag.row(k).transpose() - interp_row(b, b.vmag, t)).cwiseAbs().maxCoeff();
        if (ed > d.delta_max) d.delta_max = ed, d.t_delta_max = t;
        d.omega_max = std::max(d.omega_max, eo);
        d.vmag_max = std::max(d.vmag_max, ev);
        sd += ed;
        so += eo;
        sv += ev;
        ++d.samples;
    }
    if (d.samples) {
        d.delta_mean = sd / d.samples;
        d.omega_mean = so / d.samples;
        d.vmag_mean = sv / d.samples;
    }
    return d;
}

double divergence_onset(const Trajectory& a, const Trajectory& b, double threshold) {
    const double lo = std::max(a.t.front(), b.t.front()), hi = std::min(a.t.back(), b.t.back());
    for (int k = 0; k < a.rows(); ++k) {
        const double t = a.t[k];
        if (t < lo || t > hi) continue;
        if ((a.delta.row(k).transpose() - interp_row(b, b.delta, t)).cwiseAbs().maxCoeff() > threshold) return t;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace swing
