#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swing/reference_tds.hpp"
#include "swing/stability_assessor.hpp"

namespace swing {

struct DisturbanceScript {
    double t_end = 10.0;
    std::vector<Disturbance> events;  // sorted by time on parse (stable)
};
DisturbanceScript parse_disturbances(const std::string& text);
std::string serialize_disturbances(const DisturbanceScript& s);
DisturbanceScript load_disturbances(const std::string& path);

enum class Method { Analytic, Tds, Dm, Com };
const char* method_name(Method m);
std::vector<Method> parse_methods(const std::string& csv);

struct ScenarioOptions {
    std::vector<Method> methods{Method::Analytic, Method::Tds, Method::Dm, Method::Com};
    std::optional<double> horizon;  // overrides the script's t_end
    ValidityConfig validity;
    TdsConfig tds;
    ClassifyOptions classify;
    SolveOptions solve;
    double sample_dt = 0.01;   // analytic trajectory sampling
    bool no_reinit_pass = true;  // also run the analytic chain without reinitialization
    Exec exec = Exec::Parallel;
};

struct StageResult {
    double t_begin = 0.0, t_end = 0.0;
    NetworkState net;
    InitialState init;             // analytic chain state at t_begin
    MonitoredRun run;              // with reinitialization
    std::optional<MonitoredRun> plain;  // without
    double eps_max_plain = 0.0;    // max epsilon of the unreinitialized solution over the stage
    double o1_max_plain = 0.0;
    double T_norm = 0.0;           // ||T||_F at t_begin
    double max_re = 0.0;           // of T at t_begin
    int o1_crossings = 0;          // magnitude-drift events in the reinit run
};

struct MethodRow {
    Method method;
    std::string verdict;  // stable / unstable / certified / undetermined / skipped
    std::optional<double> value;  // COM delta_max, DM margin, analytic max Re(lambda), TDS excursion
    double seconds = 0.0;
    std::string detail;
};

struct ScenarioResult {
    std::string case_name;
    RawCase raw;
    DisturbanceScript script;
    PreFault pre;
    std::vector<StageResult> stages;
    std::optional<Trajectory> analytic, analytic_plain, tds;
    std::optional<Verdict> analytic_verdict;
    std::optional<double> tds_excursion;
    std::optional<bool> tds_stable;
    std::optional<ComReport> com;
    std::optional<EnergyReport> dm;
    DynState tds_state_at_last_event;
    std::vector<MethodRow> rows;
    std::vector<std::string> warnings;

    int total_events() const;
};

ScenarioResult simulate(const RawCase& raw, const DisturbanceScript& script, const ScenarioOptions& opt = {});

struct ScenarioConfig {
    std::string case_path, disturbance_path, out_dir;
    ScenarioOptions options;
    bool write_files = true;
};

struct Report {
    ScenarioResult result;
    std::vector<std::string> files;  // manifest
};

Report run_scenario(const ScenarioConfig& cfg);

std::string report_json(const ScenarioResult& r);
std::string report_text(const ScenarioResult& r);

// Column table: t, delta_*, omega_*, vmag_*, vang_*, O_*, O1, eps (shortest round-trip decimals).
std::string trajectory_csv(const Trajectory& t);
Trajectory parse_trajectory_csv(const std::string& text);
void export_trajectory(const Trajectory& t, const std::string& path);
Trajectory import_trajectory(const std::string& path);
std::string events_csv(const ScenarioResult& r);

std::string discrepancy_text(const Discrepancy& d);

}  // namespace swing
