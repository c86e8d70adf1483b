#pragma once

#include <utility>

#include "swing/grid_model.hpp"

namespace swing {

// x = E cos(delta - gamma), y = E sin(delta - gamma)
std::pair<double, double> to_loss_frame(double E, double delta, double gamma);
// returns (E, delta) with delta wrapped to (-pi, pi]
std::pair<double, double> from_loss_frame(double x, double y, double gamma);

// O_i = |y_ik| (x v_x + y v_y) / M_i + omega_i^2, machines only.
Vec observation_O(const NetworkModel& model, const Vec& w, const Vec& omega, const CVec& km_voltages);
// Same quantity for frequency-dependent load Ibuses (reference inertia M_ref, no speed term).
Vec observation_O_loads(const NetworkModel& model, const Vec& w_tilde, const CVec& km_voltages);

// omega = (x dy - y dx) / (x^2 + y^2) per machine
Vec rotor_speed(const Vec& w, const Vec& u);

struct ObservationMetrics {
    Vec O;        // instantaneous O_i
    Vec O2;       // |O_i - O_i(0+)|
    Vec p_tilde;  // 1 - |w_i| / E_i
    Vec v_tilde;  // sqrt|2 (x dx + y dy)| / E_i
    double O1 = 0.0;         // 2-norm of the stacked (p_tilde; v_tilde)
    double p_max = 0.0;      // max_i |p_tilde_i|
};

ObservationMetrics compute_observations(const NetworkModel& model, const Vec& w, const Vec& u, const CVec& km_voltages,
                                        const Vec& O_ref);

// (O, O_tilde) at a full state z = [w; dw/dt; w_tilde] on the given network.
std::pair<Vec, Vec> observations_at(const NetworkState& net, const Vec& z);

struct SwingSystem {
    int NI = 0, ND = 0;
    Mat L, Lt;  // 2NI square, 2ND square
    Vec l, lt;
    Mat T;      // 4NI + 2ND square
    Vec b;
    Vec D_over_M;  // NI

    // constituents, kept so the row formulas can be re-derived and split
    Vec O0, Ot0;        // frozen O values
    Vec p_term;         // (p_mech - g E^2) / M
    Vec c_H;            // |y| E^2 / M
    Vec pt_term, ct_H, mref_over_d;  // load counterparts (divided by D_j)
    IVec k, kt;         // Kbus row used by each unit
    Mat H_KI, H_KD;
    Vec vK_I;

    int n() const { return static_cast<int>(T.rows()); }
};

SwingSystem assemble_system(const NetworkModel& model, const VoltageMap& vm, const Vec& O0, const Vec& Ot0 = Vec());

// L and L-tilde rebuilt from the stored constituents with the row formulas.
Mat rebuild_L(const SwingSystem& sys);
Mat rebuild_Lt(const SwingSystem& sys);

// T with the frozen O values replaced, used for epsilon tracking and re-solves.
SwingSystem with_frozen_O(const SwingSystem& sys, const Vec& O0, const Vec& Ot0 = Vec());

// || dT ||_F for an O substitution: sqrt(2 sum (O_i - O_i0)^2) (+ load rows).
double delta_T_norm(const SwingSystem& sys, const Vec& O, const Vec& Ot = Vec());

}  // namespace swing
