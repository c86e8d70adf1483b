#pragma once

#include <vector>

#include "swing/grid_model.hpp"

namespace swing {

struct PowerFlowOptions {
    double tolerance = 1e-8;  // p.u. mismatch
    int max_iterations = 30;
};

struct OperatingPoint {
    CVec bus_voltage;  // RawCase::buses order
    Vec p_inj, q_inj;  // per dynamic unit, at its terminal
    Vec delta, omega;  // machines (NI), rad and rad/s deviation
    Vec E;             // internal voltage magnitudes actually used, NI + ND
    Vec w;             // 2NI loss-frame internal voltages
    Vec w_tilde;       // 2ND
    Vec p_mech;        // NI, resolved mechanical power
    int iterations = 0;
    double mismatch = 0.0;
};

// Newton-Raphson in polar form on the original network.  Machine internal angles
// are recovered from the terminal state; p_mech is left unresolved.
OperatingPoint solve_power_flow(const NetworkModel& model, const PowerFlowOptions& opt = {});

// Power flow, load categorization at the solved voltages, internal-voltage
// initialization and p_mech resolution (p_mech := p_elec where not given).
// The returned model carries the LoadSet and the chosen E per unit.
struct PreFault {
    NetworkModel model;
    NetworkState network;
    OperatingPoint op;
};
PreFault initialize(const NetworkModel& model, const PowerFlowOptions& opt = {});

struct Disturbance {
    enum class Kind { LoadScale, Fault, FaultClear, LineOpen, LineClose };
    Kind kind = Kind::LoadScale;
    double time = 0.0;
    int bus = 0;
    double factor = 1.0;
    std::optional<cplx> fault_admittance;  // defaults to the case option
    int from = 0, to = 0;
};

NetworkModel apply_disturbance(const NetworkModel& model, const Disturbance& d);

// Rotor angle/speed (and load internal voltage) state carried across events.
struct DynState {
    Vec delta, omega;  // NI
    Vec w_tilde;       // 2ND
};

struct InitialState {
    Vec z;       // [w; dw/dt; w_tilde]
    Mat J;       // [0 diag(w0); -diag(w0) 0]
    Vec O;       // O_i at 0+, NI
    Vec O_tilde; // load counterparts, ND
    Vec delta, omega;
    CVec bus_voltage;  // Kbus/Mbus voltages at 0+ (model order)
    bool islanded = false;
};

InitialState post_disturbance_state(const DynState& s, const NetworkState& net);
InitialState post_disturbance_state(const OperatingPoint& pre, const NetworkState& net);

// Loss-frame internal voltages from angles.
Vec machine_w(const NetworkModel& model, const Vec& delta);

// Original-bus voltages from the model voltages (RawCase::buses order).
CVec original_bus_voltages(const NetworkModel& model, const CVec& km_voltages);

}  // namespace swing
