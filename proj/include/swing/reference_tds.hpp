#pragma once

#include <functional>
#include <string>
#include <vector>

#include "swing/steady_state.hpp"

namespace swing {

enum class RkMode { Appendix, Textbook };

struct TdsConfig {
    double dt = 0.01;
    RkMode mode = RkMode::Appendix;
    double refine_factor = 0.5;     // step multiplier for the convergence study
    double invariance_tol = 1e-6;   // rad, final-state change accepted by the study
    int max_refinements = 4;
    void validate() const;
};

// Column-oriented samples.  delta/omega: rows x NI; vmag/vang: rows x buses (RawCase order).
struct Trajectory {
    std::string source;  // "analytic" or "tds"
    std::vector<double> t;
    Mat delta, omega, vmag, vang, O;
    Vec O1, eps;
    std::vector<int> bus_ids;

    int rows() const { return static_cast<int>(t.size()); }
    int machines() const { return static_cast<int>(delta.cols()); }
    // replace_last: the other stage's first row (post-event values) supersedes our last one
    void append(const Trajectory& other, bool replace_last);
};

// Electrical output of every dynamic unit for rotor angles (NI) and load angles (ND).
Vec electrical_power(const NetworkState& net, const Vec& delta, const Vec& delta_tilde, CVec* km_voltages = nullptr);

// One integration stage on a fixed network.
struct TdsStage {
    Trajectory traj;
    DynState final;
};
TdsStage rk4_simulate(const NetworkState& net, const DynState& z0, double t0, double t_end, const TdsConfig& cfg);

// Generic classical RK4 for test problems; returns the state at t1.
Vec rk4_integrate(const std::function<Vec(double, const Vec&)>& f, const Vec& z0, double t0, double t1, double dt);

struct RefinementStudy {
    std::vector<double> dts;
    std::vector<double> changes;  // max |delta| change between successive refinements
    double accepted_dt = 0.0;
    bool converged = false;
};
RefinementStudy step_refinement(const NetworkState& net, const DynState& z0, double t0, double t_end,
                                const TdsConfig& cfg);

struct Discrepancy {
    double delta_max = 0.0, delta_mean = 0.0, t_delta_max = 0.0;
    double omega_max = 0.0, omega_mean = 0.0;
    double vmag_max = 0.0, vmag_mean = 0.0;
    int samples = 0;
};
// b is linearly interpolated onto a's grid over the common time range.
Discrepancy compare_trajectories(const Trajectory& a, const Trajectory& b);

// First time the per-sample max |delta difference| exceeds `threshold`, or NaN.
double divergence_onset(const Trajectory& a, const Trajectory& b, double threshold);

}  // namespace swing
