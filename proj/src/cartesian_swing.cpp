#include "swing/cartesian_swing.hpp"

#include <cmath>
#include <numbers>

namespace swing {

std::pair<double, double> to_loss_frame(double E, double delta, double gamma) {
    if (!(E > 0.0)) throw ValidationError("internal voltage magnitude must be positive");
    return {E * std::cos(delta - gamma), E * std::sin(delta - gamma)};
}

std::pair<double, double> from_loss_frame(double x, double y, double gamma) {
    const double E = std::hypot(x, y);
    double d = std::remainder(std::atan2(y, x) + gamma, 2.0 * std::numbers::pi);
    if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
    return {E, d};
}

Vec observation_O(const NetworkModel& model, const Vec& w, const Vec& omega, const CVec& v) {
    const int NI = model.NI;
    Vec O(NI);
    for (int i = 0; i < NI; ++i) {
        const auto& u = model.units[i];
        const cplx vk = v(u.k);
        O(i) = u.ymag * (w(i) * vk.real() + w(NI + i) * vk.imag()) / u.M + omega(i) * omega(i);
    }
    return O;
}

Vec observation_O_loads(const NetworkModel& model, const Vec& wt, const CVec& v) {
    const int NI = model.NI, ND = model.ND;
    Vec O(ND);
    for (int j = 0; j < ND; ++j) {
        const auto& u = model.units[NI + j];
        const cplx vk = v(u.k);
        O(j) = u.ymag * (wt(j) * vk.real() + wt(ND + j) * vk.imag()) / u.M;
    }
    return O;
}

Vec rotor_speed(const Vec& w, const Vec& u) {
    const Eigen::Index NI = w.size() / 2;
    Vec om(NI);
    for (Eigen::Index i = 0; i < NI; ++i) {
        const double x = w(i), y = w(NI + i);
        om(i) = (x * u(NI + i) - y * u(i)) / (x * x + y * y);
    }
    return om;
}

ObservationMetrics compute_observations(const NetworkModel& model, const Vec& w, const Vec& u, const CVec& v,
                                        const Vec& O_ref) {
    const int NI = model.NI;
    if (w.size() != 2 * NI || u.size() != 2 * NI) throw ValidationError("observation state has wrong dimension");
    ObservationMetrics m;
    m.O = observation_O(model, w, rotor_speed(w, u), v);
    m.O2 = (m.O - O_ref).cwiseAbs();
    m.p_tilde.resize(NI);
    m.v_tilde.resize(NI);
    for (int i = 0; i < NI; ++i) {
        const double E = model.units[i].E;
        const double x = w(i), y = w(NI + i);
        m.p_tilde(i) = 1.0 - std::hypot(x, y) / E;
        m.v_tilde(i) = std::sqrt(std::abs(2.0 * x * u(i) + 2.0 * y * u(NI + i))) / E;
    }
    m.O1 = std::sqrt(m.p_tilde.squaredNorm() + m.v_tilde.squaredNorm());
    m.p_max = NI ? m.p_tilde.cwiseAbs().maxCoeff() : 0.0;
    return m;
}

std::pair<Vec, Vec> observations_at(const NetworkState& net, const Vec& z) {
    const auto& model = net.model;
    const int NI = model.NI, ND = model.ND;
    if (z.size() != 4 * NI + 2 * ND) throw ValidationError("state has wrong dimension");
    CVec wall(NI + ND);
    for (int i = 0; i < NI; ++i) wall(i) = cplx(z(i), z(NI + i));
    for (int j = 0; j < ND; ++j) wall(NI + j) = cplx(z(4 * NI + j), z(4 * NI + ND + j));
    const CVec v = net.vmap.bus_voltages(wall);
    const Vec w = z.head(2 * NI);
    return {observation_O(model, w, rotor_speed(w, z.segment(2 * NI, 2 * NI)), v),
            observation_O_loads(model, z.tail(2 * ND), v)};
}

namespace {

void fill_T(SwingSystem& s) {
    const int NI = s.NI, ND = s.ND, n = 4 * NI + 2 * ND;
    s.T = Mat::Zero(n, n);
    s.T.block(0, 2 * NI, 2 * NI, 2 * NI).setIdentity();
    s.T.block(2 * NI, 0, 2 * NI, 2 * NI) = -s.L;
    for (int i = 0; i < NI; ++i) {
        s.T(2 * NI + i, 2 * NI + i) = -s.D_over_M(i);
        s.T(3 * NI + i, 3 * NI + i) = -s.D_over_M(i);
    }
    if (ND) s.T.block(4 * NI, 4 * NI, 2 * ND, 2 * ND) = -s.Lt;
    s.b = Vec::Zero(n);
    s.b.segment(2 * NI, 2 * NI) = -s.l;
    if (ND) s.b.tail(2 * ND) = -s.lt;
}

}  // namespace

Mat rebuild_L(const SwingSystem& s) {
    const int NI = s.NI, NK = static_cast<int>(s.H_KI.rows() / 2);
    Mat L = Mat::Zero(2 * NI, 2 * NI);
    for (int i = 0; i < NI; ++i) {
        // row i:     O e_i + p e_{NI+i} - c (row k of H_KI)
        // row NI+i: -p e_i + O e_{NI+i} - c (row NK+k of H_KI)
        L(i, i) += s.O0(i);
        L(i, NI + i) += s.p_term(i);
        L.row(i) -= s.c_H(i) * s.H_KI.row(s.k(i));
        L(NI + i, i) -= s.p_term(i);
        L(NI + i, NI + i) += s.O0(i);
        L.row(NI + i) -= s.c_H(i) * s.H_KI.row(NK + s.k(i));
    }
    return L;
}

Mat rebuild_Lt(const SwingSystem& s) {
    const int ND = s.ND, NK = static_cast<int>(s.H_KD.rows() / 2);
    Mat Lt = Mat::Zero(2 * ND, 2 * ND);
    for (int j = 0; j < ND; ++j) {
        Lt(j, j) += s.mref_over_d(j) * s.Ot0(j);
        Lt(j, ND + j) += s.pt_term(j);
        Lt.row(j) -= s.ct_H(j) * s.H_KD.row(s.kt(j));
        Lt(ND + j, j) -= s.pt_term(j);
        Lt(ND + j, ND + j) += s.mref_over_d(j) * s.Ot0(j);
        Lt.row(ND + j) -= s.ct_H(j) * s.H_KD.row(NK + s.kt(j));
    }
    return Lt;
}

SwingSystem assemble_system(const NetworkModel& model, const VoltageMap& vm, const Vec& O0, const Vec& Ot0) {
    const int NI = model.NI, ND = model.ND, NK = vm.NK;
    if (O0.size() != NI) throw ValidationError("frozen O vector has wrong dimension");
    SwingSystem s;
    s.NI = NI;
    s.ND = ND;
    s.O0 = O0;
    s.Ot0 = ND ? (Ot0.size() == ND ? Ot0 : Vec(Vec::Zero(ND))) : Vec();
    s.H_KI = vm.H_KI;
    s.H_KD = vm.H_KD;
    s.vK_I = vm.vK_I;
    s.D_over_M.resize(NI);
    s.p_term.resize(NI);
    s.c_H.resize(NI);
    s.k.resize(NI);
    s.l.resize(2 * NI);
    for (int i = 0; i < NI; ++i) {
        const auto& u = model.units[i];
        if (!u.p_mech) throw ValidationError("p_mech unresolved for unit at bus " + std::to_string(u.bus_id));
        s.D_over_M(i) = u.D / u.M;
        s.p_term(i) = (*u.p_mech - u.g * u.E * u.E) / u.M;
        s.c_H(i) = u.ymag * u.E * u.E / u.M;
        s.k(i) = u.k;
        s.l(i) = -s.c_H(i) * vm.vK_I(u.k);
        s.l(NI + i) = -s.c_H(i) * vm.vK_I(NK + u.k);
    }
    s.pt_term.resize(ND);
    s.ct_H.resize(ND);
    s.mref_over_d.resize(ND);
    s.kt.resize(ND);
    s.lt.resize(2 * ND);
    for (int j = 0; j < ND; ++j) {
        const auto& u = model.units[NI + j];
        s.pt_term(j) = (u.p_mech.value_or(0.0) - u.g * u.E * u.E) / u.D;
        s.ct_H(j) = u.ymag * u.E * u.E / u.D;
        s.mref_over_d(j) = u.M / u.D;
        s.kt(j) = u.k;
        s.lt(j) = -s.ct_H(j) * vm.vK_I(u.k);
        s.lt(ND + j) = -s.ct_H(j) * vm.vK_I(NK + u.k);
    }
    s.L = rebuild_L(s);
    s.Lt = ND ? rebuild_Lt(s) : Mat();
    fill_T(s);
    return s;
}

SwingSystem with_frozen_O(const SwingSystem& sys, const Vec& O0, const Vec& Ot0) {
    SwingSystem s = sys;
    s.O0 = O0;
    if (s.ND && Ot0.size() == s.ND) s.Ot0 = Ot0;
    s.L = rebuild_L(s);
    if (s.ND) s.Lt = rebuild_Lt(s);
    fill_T(s);
    return s;
}

double delta_T_norm(const SwingSystem& sys, const Vec& O, const Vec& Ot) {
    double sq = 2.0 * (O - sys.O0).squaredNorm();
    if (sys.ND && Ot.size() == sys.ND) sq += 2.0 * (sys.mref_over_d.cwiseProduct(Ot - sys.Ot0)).squaredNorm();
    return std::sqrt(sq);
}

}  // namespace swing
