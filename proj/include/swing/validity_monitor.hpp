#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swing/analytic_engine.hpp"

namespace swing {

enum class GateNorm { DeltaCon, PerMachine };
enum class ProjectionMode { Staged, Newton };

struct ValidityConfig {
    double delta_E = 0.10;
    double delta_T = 0.01;
    double h = 0.1;              // velocity-row scaling in the Newton projection
    double resolution = 1e-3;    // s, boundary sampling step
    double bisection_tol = 1e-4; // s
    GateNorm gate = GateNorm::DeltaCon;
    ProjectionMode projection = ProjectionMode::Staged;
    bool reinit = true;
    int max_events = 5000;
    double g_tol = 1e-10, f_tol = 1e-8;
    int newton_max_iter = 50;
    int sample_chunk = 256;

    void validate() const;
};

struct ProjectionNorms {
    double delta_con = 0.0;
    double p_max = 0.0;
    Vec p_tilde, v_tilde;
};
ProjectionNorms projection_norms(const Vec& w, const Vec& u, const Vec& E);

// eps = ||dT||_F / ||T||_F for instantaneous O values substituted into T.
double epsilon(const SwingSystem& sys, const Vec& O, const Vec& Ot = Vec());

// Everything the monitor looks at for one analytic sample.
struct Probe {
    double t = 0.0;
    double O1 = 0.0;     // delta_con
    double p_max = 0.0;  // per-machine max |p_tilde|
    double eps = 0.0;
    Vec O;
    bool divergent = false;
};
Probe probe(const AnalyticSolution& sol, const SwingSystem& sys, const NetworkModel& model, double t);
std::vector<Probe> probe_many(const AnalyticSolution& sol, const SwingSystem& sys, const NetworkModel& model,
                              const std::vector<double>& ts, Exec exec = Exec::Parallel);

enum class Trigger { MagnitudeDrift, TDrift };
const char* trigger_name(Trigger t);

struct Crossing {
    double tau = 0.0;
    Trigger trigger = Trigger::MagnitudeDrift;
    Probe at;
};

// Earliest gate crossing in (t_origin, t_end]; none if the solution stays valid.
std::optional<Crossing> locate_boundary(const AnalyticSolution& sol, const SwingSystem& sys,
                                        const NetworkModel& model, double t_end, const ValidityConfig& cfg,
                                        Exec exec = Exec::Parallel);

struct ReinitResult {
    Vec z;
    Vec O, O_tilde;   // new frozen values
    SwingSystem sys;  // rebuilt with them
    double g_before = 0.0, g_after = 0.0, f_after = 0.0;
    int iterations = 0;
};

// Constraint residual max(|x^2+y^2-E^2|, |x dx + y dy|) over machines.
double constraint_residual(const Vec& z, const Vec& E);

ReinitResult consistent_reinit(const NetworkState& net, const SwingSystem& sys, const Vec& z, const ValidityConfig& cfg);

// First-order drift estimate (I + T dt) dz0 + (dt dT) z0.
Vec propagate_error(const Mat& T, const Mat& dT, const Vec& dz0, const Vec& z0, double dt);

struct BoundaryEvent {
    double tau = 0.0;
    Trigger trigger = Trigger::MagnitudeDrift;
    double O1 = 0.0, p_max = 0.0, eps = 0.0;
    Vec z_pre, z_post;
    double g_before = 0.0, g_after = 0.0;
    int iterations = 0;
    double T_norm = 0.0;
    double max_re = 0.0;  // of the updated T
};

struct Segment {
    double t_begin = 0.0, t_end = 0.0;
    SwingSystem sys;
    AnalyticSolution sol;
};

struct MonitoredRun {
    NetworkState net;
    std::vector<Segment> segments;
    std::vector<BoundaryEvent> events;
    std::vector<std::string> warnings;

    const Segment& segment_at(double t) const;
    Vec z_at(double t) const;
};

MonitoredRun run_monitored(const NetworkState& net, const Vec& z0, double t0, double t_end, const ValidityConfig& cfg,
                           const SolveOptions& solve = {}, Exec exec = Exec::Parallel);

}  // namespace swing
