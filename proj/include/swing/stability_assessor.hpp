#pragma once

#include <string>
#include <vector>

#include "swing/validity_monitor.hpp"

namespace swing {

struct CoiFrame {
    double delta_coi = 0.0, omega_coi = 0.0, M_T = 0.0;
    Vec delta_rel, omega_rel;
};
CoiFrame coi_frame(const Vec& M, const Vec& delta, const Vec& omega);

enum class StabilityType { I, II, III, IV, Undetermined };
const char* type_name(StabilityType t);

struct ClassifyOptions {
    double T_op = 10.0;        // s
    double sample_dt = 0.01;   // s, excursion sampling
    double re_tol = 1e-9;      // Re(lambda) treated as non-positive below this
    double theta_tol = 1e-12;
};

struct Verdict {
    StabilityType type = StabilityType::Undetermined;
    double max_re = 0.0;
    double dominant_coeff = 0.0;  // coefficient mass on modes with Re > 0
    double T_op = 10.0;
    double max_excursion = 0.0;   // COI-relative rotor-angle excursion, rad
    int runaway_machine = -1;
    std::string rationale;
    bool stable() const { return type == StabilityType::I || type == StabilityType::II || type == StabilityType::III; }
};

// Rotor angles (unwrapped in time) along an analytic run.
Mat angle_history(const MonitoredRun& run, const std::vector<double>& ts, Exec exec = Exec::Parallel);

// Type from the largest growth rate over the run's segments and the excursion over [t_from, t_from + T_op].
Verdict classify(const MonitoredRun& run, double t_from, const ClassifyOptions& opt = {});
Verdict classify(const AnalyticSolution& sol, const NetworkModel& model, const ClassifyOptions& opt = {});

// T = T_sys - T_op.  T_sys keeps the network and damping terms, T_op the frozen O
// values and the mechanical-power terms.
struct SplitT {
    Mat T_sys, T_op;
    bool diagonalizable = false;
    double kappa = 0.0;       // 2-norm condition number of the eigenvector matrix of T_sys
    double op_norm = 0.0;     // ||T_op||_2
    double bound = 0.0;       // kappa * ||T_op||_2
    double max_distance = 0.0;  // max over eig(T) of the distance to eig(T_sys)
    bool bound_holds() const { return diagonalizable && max_distance <= bound * (1 + 1e-9) + 1e-12; }
};
SplitT split_T(const SwingSystem& sys);
SplitT bauer_fike(const Mat& T_sys, const Mat& T_op);

struct EigenCondition {
    cplx lambda;
    double s = 0.0;      // |u_L^H u_R| with unit-norm eigenvectors, in (0, 1]
    double inv_s = 0.0;  // 1/s, the eigenvalue sensitivity factor
    bool defined = true; // false for eigenvalues multiple at tolerance
};
std::vector<EigenCondition> eigen_condition(const Mat& T, double multiple_tol = 1e-8);

struct ComReport {
    double delta_max = 0.0;       // max |angle difference| over connected bus pairs
    double sync_condition = 0.0;  // ||L^+ P||_{E,inf}
    double threshold = 0.0;
    bool certified = false;
    int components = 1;
    std::vector<std::string> warnings;
};
// Graph: every in-service model branch and machine link, weights |y| |V_a| |V_b|.
// node_voltages are actual-frame voltages at every model node (Ibuses first);
// injections are p_mech at machine Ibuses and the drawn load power elsewhere.
ComReport com_check(const NetworkState& net, const CVec& node_voltages, double threshold);

struct EnergyReport {
    double V_cl = 0.0, V_cr = 0.0, V_margin = 0.0;
    double kinetic = 0.0, potential = 0.0;
    Vec delta_s, delta_u;  // per machine, relative to the terminal bus
    int critical_machine = -1;
    bool certified = false;
};
// Per-machine single-link energy against the terminal voltage of the given network state.
EnergyReport dm_margin(const NetworkState& net, const Vec& delta, const Vec& omega, const CVec& km_voltages);

// Reduced internal-node admittance (loss frame) of a network without constant load currents.
CMat reduced_admittance(const NetworkState& net);
// Classical energy for a purely reactive reduced network.
double lossless_energy(const CMat& Yred, const Vec& E, const Vec& M, const Vec& Pm, const Vec& delta, const Vec& omega);

}  // namespace swing
