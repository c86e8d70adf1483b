#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "swing/cli_io.hpp"

namespace swing {

using nlohmann::json;

namespace {

constexpr const char* kScriptFormat = "swingcart-disturbances";
constexpr int kScriptVersion = 1;

struct KindName {
    Disturbance::Kind kind;
    const char* name;
};
constexpr KindName kKinds[] = {{Disturbance::Kind::LoadScale, "load_scale"},
                               {Disturbance::Kind::Fault, "fault"},
                               {Disturbance::Kind::FaultClear, "fault_clear"},
                               {Disturbance::Kind::LineOpen, "line_open"},
                               {Disturbance::Kind::LineClose, "line_close"}};

double number(const json& o, const char* key, const std::string& at) {
    if (!o.contains(key)) throw ParseError(at + ": missing field '" + key + "'");
    if (!o[key].is_number()) throw ParseError(at + "." + key + ": expected a number");
    return o[key].get<double>();
}

int integer(const json& o, const char* key, const std::string& at) {
    if (!o.contains(key)) throw ParseError(at + ": missing field '" + key + "'");
    if (!o[key].is_number_integer()) throw ParseError(at + "." + key + ": expected an integer");
    return o[key].get<int>();
}

}  // namespace

DisturbanceScript parse_disturbances(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("disturbance script: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", std::string()) != kScriptFormat)
        throw ParseError(std::string("disturbance script: 'format' must be \"") + kScriptFormat + "\"");
    if (integer(doc, "version", "script") != kScriptVersion) throw ParseError("disturbance script: unsupported version");
    DisturbanceScript s;
    s.t_end = doc.contains("t_end") ? number(doc, "t_end", "script") : s.t_end;
    if (!(s.t_end > 0)) throw ValidationError("script.t_end must be positive");
    if (!doc.contains("events") || !doc["events"].is_array()) throw ParseError("script: 'events' must be an array");
    for (size_t i = 0; i < doc["events"].size(); ++i) {
        const json& e = doc["events"][i];
        const std::string at = "events[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("kind") || !e["kind"].is_string())
            throw ParseError(at + ": missing string field 'kind'");
        Disturbance d;
        const std::string kind = e["kind"].get<std::string>();
        const auto* k = std::find_if(std::begin(kKinds), std::end(kKinds), [&](const KindName& kn) { return kind == kn.name; });
        if (k == std::end(kKinds)) throw ParseError(at + ".kind: unknown disturbance '" + kind + "'");
        d.kind = k->kind;
        d.time = number(e, "time", at);
        if (d.time < 0) throw ValidationError(at + ".time must be non-negative");
        switch (d.kind) {
            case Disturbance::Kind::LoadScale:
                d.bus = integer(e, "bus", at);
                d.factor = number(e, "factor", at);
                break;
            case Disturbance::Kind::Fault:
                d.bus = integer(e, "bus", at);
                if (e.contains("admittance")) {
                    const json& y = e["admittance"];
                    if (!y.is_array() || y.size() != 2) throw ParseError(at + ".admittance: expected [g, b]");
                    d.fault_admittance = cplx(y[0].get<double>(), y[1].get<double>());
                }
                break;
            case Disturbance::Kind::FaultClear: d.bus = integer(e, "bus", at); break;
            case Disturbance::Kind::LineOpen:
            case Disturbance::Kind::LineClose:
                d.from = integer(e, "from", at);
                d.to = integer(e, "to", at);
                break;
        }
        s.events.push_back(d);
    }
    std::stable_sort(s.events.begin(), s.events.end(), [](const Disturbance& a, const Disturbance& b) { return a.time < b.time; });
    return s;
}

std::string serialize_disturbances(const DisturbanceScript& s) {
    json doc = {{"format", kScriptFormat}, {"version", kScriptVersion}, {"t_end", s.t_end}};
    json ev = json::array();
    for (const auto& d : s.events) {
        const auto* k = std::find_if(std::begin(kKinds), std::end(kKinds), [&](const KindName& kn) { return kn.kind == d.kind; });
        json e = {{"time", d.time}, {"kind", k->name}};
        switch (d.kind) {
            case Disturbance::Kind::LoadScale: e["bus"] = d.bus, e["factor"] = d.factor; break;
            case Disturbance::Kind::Fault:
                e["bus"] = d.bus;
                if (d.fault_admittance) e["admittance"] = {d.fault_admittance->real(), d.fault_admittance->imag()};
                break;
            case Disturbance::Kind::FaultClear: e["bus"] = d.bus; break;
            default: e["from"] = d.from, e["to"] = d.to;
        }
        ev.push_back(e);
    }
    doc["events"] = ev;
    return doc.dump(2) + "\n";
}

DisturbanceScript load_disturbances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open disturbance script '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_disturbances(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Analytic: return "analytic";
        case Method::Tds: return "tds";
        case Method::Dm: return "dm";
        default: return "com";
    }
}

std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "analytic") out.push_back(Method::Analytic);
        else if (tok == "tds") out.push_back(Method::Tds);
        else if (tok == "dm") out.push_back(Method::Dm);
        else if (tok == "com") out.push_back(Method::Com);
        else if (tok == "all") out.insert(out.end(), {Method::Analytic, Method::Tds, Method::Dm, Method::Com});
        else throw ValidationError("unknown method '" + tok + "' (expected analytic, tds, dm, com)");
    }
    if (out.empty()) throw ValidationError("at least one method must be selected");
    return out;
}

int ScenarioResult::total_events() const {
    int n = 0;
    for (const auto& s : stages) n += static_cast<int>(s.run.events.size());
    return n;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

DynState dyn_state_of(const NetworkModel& m, const Vec& z) {
    const int NI = m.NI, ND = m.ND;
    DynState s;
    s.delta.resize(NI);
    for (int i = 0; i < NI; ++i) s.delta(i) = std::atan2(z(NI + i), z(i)) + m.units[i].gamma;
    s.omega = rotor_speed(z.head(2 * NI), z.segment(2 * NI, 2 * NI));
    s.w_tilde = z.tail(2 * ND);
    return s;
}

std::vector<double> stage_grid(double a, double b, double dt) {
    std::vector<double> ts;
    const long k0 = static_cast<long>(std::ceil(a / dt - 1e-9)), k1 = static_cast<long>(std::floor(b / dt + 1e-9));
    if (std::abs(k0 * dt - a) > 1e-9) ts.push_back(a);
    for (long k = k0; k <= k1; ++k) ts.push_back(std::abs(k * dt - b) <= 1e-9 ? b : k * dt);
    if (ts.empty() || std::abs(ts.back() - b) > 1e-9) ts.push_back(b);
    return ts;
}

Trajectory sample_run(const MonitoredRun& run, const std::vector<double>& ts, Exec exec) {
    const auto& m = run.net.model;
    const int NI = m.NI, ND = m.ND, rows = static_cast<int>(ts.size()), nb = static_cast<int>(m.raw.buses.size());
    Trajectory tr;
    tr.source = "analytic";
    tr.t = ts;
    for (const auto& b : m.raw.buses) tr.bus_ids.push_back(b.id);
    tr.delta.resize(rows, NI);
    tr.omega.resize(rows, NI);
    tr.vmag.resize(rows, nb);
    tr.vang.resize(rows, nb);
    tr.O.resize(rows, NI);
    tr.O1.resize(rows);
    tr.eps.resize(rows);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int k = 0; k < rows; ++k) {
        const Segment& seg = run.segment_at(ts[k]);
        const AnalyticState s = evaluate(seg.sol, ts[k]);
        const Vec w = s.z.head(2 * NI), u = s.z.segment(2 * NI, 2 * NI);
        const auto obs = compute_observations(m, w, u, s.v_km, seg.sys.O0);
        const CVec V = original_bus_voltages(m, s.v_km);
        for (int i = 0; i < NI; ++i) tr.delta(k, i) = std::atan2(w(NI + i), w(i)) + m.units[i].gamma;
        tr.omega.row(k) = rotor_speed(w, u).transpose();
        tr.vmag.row(k) = V.cwiseAbs().transpose();
        tr.vang.row(k) = V.unaryExpr([](cplx c) { return std::arg(c); }).real().transpose();
        tr.O.row(k) = obs.O.transpose();
        tr.O1(k) = obs.O1;
        tr.eps(k) = epsilon(seg.sys, obs.O, observation_O_loads(m, s.z.tail(2 * ND), s.v_km));
    }
    return tr;
}

void unwrap_angles(Trajectory& tr) {
    for (int k = 1; k < tr.rows(); ++k)
        for (int i = 0; i < tr.machines(); ++i)
            tr.delta(k, i) -= 2 * std::numbers::pi * std::round((tr.delta(k, i) - tr.delta(k - 1, i)) / (2 * std::numbers::pi));
}

double coi_excursion(const Trajectory& tr, const Vec& M, double t_from) {
    int k0 = 0;
    while (k0 < tr.rows() && tr.t[k0] < t_from - 1e-12) ++k0;
    if (k0 >= tr.rows()) return 0.0;
    auto rel = [&](int k) {
        const Vec d = tr.delta.row(k).transpose();
        return Vec(d.array() - M.dot(d) / M.sum());
    };
    const Vec r0 = rel(k0);
    double e = 0.0;
    for (int k = k0; k < tr.rows(); ++k) e = std::max(e, (rel(k) - r0).cwiseAbs().maxCoeff());
    return e;
}

bool has(const std::vector<Method>& ms, Method m) { return std::find(ms.begin(), ms.end(), m) != ms.end(); }

}  // namespace

ScenarioResult simulate(const RawCase& raw, const DisturbanceScript& script, const ScenarioOptions& opt) {
    if (opt.methods.empty()) throw ValidationError("at least one method must be selected");
    const double t_end = opt.horizon.value_or(script.t_end);
    if (!(t_end > 0)) throw ValidationError("horizon must be positive");
    if (!(opt.sample_dt > 0)) throw ValidationError("sampling step must be positive");
    opt.validity.validate();
    opt.tds.validate();

    ScenarioResult r;
    r.case_name = raw.name;
    r.raw = raw;
    r.script = script;
    r.pre = initialize(build_network_model(raw));

    std::vector<double> bounds{0.0};
    for (const auto& d : script.events) {
        if (d.time >= t_end) {
            r.warnings.push_back("event at t = " + std::to_string(d.time) + " lies beyond the horizon and is ignored");
            continue;
        }
        if (d.time > bounds.back()) bounds.push_back(d.time);
    }
    bounds.push_back(t_end);
    const int nstage = static_cast<int>(bounds.size()) - 1;

    const bool want_analytic = has(opt.methods, Method::Analytic);
    const bool want_tds = has(opt.methods, Method::Tds);
    const bool want_state = has(opt.methods, Method::Dm) || has(opt.methods, Method::Com);

    NetworkModel model = r.pre.model;
    NetworkState net = r.pre.network;
    const DynState start{r.pre.op.delta, r.pre.op.omega, r.pre.op.w_tilde};
    DynState a_state = start, p_state = start, t_state = start;
    Trajectory a_traj, p_traj, t_traj;
    double t_analytic = 0.0, t_tds = 0.0;

    size_t next_event = 0;
    for (int s = 0; s < nstage; ++s) {
        const double tb = bounds[s], te = bounds[s + 1];
        // events at exactly tb (t = 0 events apply before the first stage)
        bool changed = false;
        while (next_event < script.events.size() && script.events[next_event].time <= tb + 1e-12) {
            if (script.events[next_event].time < t_end) {
                model = apply_disturbance(model, script.events[next_event]);
                changed = true;
            }
            ++next_event;
        }
        if (changed) net = prepare_network(model);

        StageResult st;
        st.t_begin = tb;
        st.t_end = te;
        st.net = net;
        const auto ts = stage_grid(tb, te, opt.sample_dt);

        if (want_analytic) {
            const auto c0 = Clock::now();
            st.init = post_disturbance_state(a_state, net);
            if (st.init.islanded) r.warnings.push_back("stage at t = " + std::to_string(tb) + " leaves a machine islanded");
            st.run = run_monitored(net, st.init.z, tb, te, opt.validity, opt.solve, opt.exec);
            a_state = dyn_state_of(net.model, st.run.z_at(te));
            t_analytic += seconds_since(c0);
            st.T_norm = st.run.segments.front().sys.T.norm();
            st.max_re = st.run.segments.front().sol.spectrum.max_real();
            for (const auto& e : st.run.events) st.o1_crossings += e.trigger == Trigger::MagnitudeDrift;
            for (const auto& w : st.run.warnings) r.warnings.push_back(w);
            a_traj.append(sample_run(st.run, ts, opt.exec), true);

            if (opt.no_reinit_pass) {
                ValidityConfig plain = opt.validity;
                plain.reinit = false;
                const InitialState pi = post_disturbance_state(p_state, net);
                st.plain = run_monitored(net, pi.z, tb, te, plain, opt.solve, opt.exec);
                p_state = dyn_state_of(net.model, st.plain->z_at(te));
                Trajectory pt = sample_run(*st.plain, ts, opt.exec);
                st.eps_max_plain = pt.eps.size() ? pt.eps.maxCoeff() : 0.0;
                st.o1_max_plain = pt.O1.size() ? pt.O1.maxCoeff() : 0.0;
                p_traj.append(pt, true);
            }
        }
        if (s == nstage - 1) r.tds_state_at_last_event = t_state;
        if (want_tds || (want_state && s < nstage - 1)) {
            const auto c0 = Clock::now();
            TdsStage ts_stage = rk4_simulate(net, t_state, tb, te, opt.tds);
            t_tds += seconds_since(c0);
            t_state = ts_stage.final;
            t_traj.append(ts_stage.traj, true);
        }
        r.stages.push_back(std::move(st));
    }

    const double t_last = bounds[nstage - 1];
    const NetworkState& final_net = r.stages.back().net;
    Vec M(model.NI);
    for (int i = 0; i < model.NI; ++i) M(i) = model.units[i].M;

    if (want_analytic) {
        unwrap_angles(a_traj);
        r.analytic = a_traj;
        if (opt.no_reinit_pass) {
            unwrap_angles(p_traj);
            p_traj.source = "analytic-noreinit";
            r.analytic_plain = p_traj;
        }
        r.analytic_verdict = classify(r.stages.back().run, t_last, opt.classify);
    }
    if (want_tds) {
        r.tds = t_traj;
        r.tds_excursion = coi_excursion(t_traj, M, t_last);
        r.tds_stable = *r.tds_excursion < std::numbers::pi;
    }

    // certificates at the state entering the final network
    const DynState& cs = r.tds_state_at_last_event;
    double t_dm = 0.0, t_com = 0.0;
    if (has(opt.methods, Method::Dm)) {
        const auto c0 = Clock::now();
        const InitialState at = post_disturbance_state(cs, final_net);
        try {
            r.dm = dm_margin(final_net, cs.delta, cs.omega, at.bus_voltage);
        } catch (const NumericalError& e) {
            r.warnings.push_back(std::string("direct method: ") + e.what());
        }
        t_dm = seconds_since(c0);
    }
    if (has(opt.methods, Method::Com)) {
        const auto c0 = Clock::now();
        const InitialState at = post_disturbance_state(cs, final_net);
        const auto& fm = final_net.model;
        CVec V(fm.n_nodes());
        for (int i = 0; i < fm.NI; ++i) V(i) = std::polar(fm.units[i].E, cs.delta(i));
        for (int j = 0; j < fm.ND; ++j)
            V(fm.NI + j) = std::polar(1.0, fm.units[fm.NI + j].gamma) * cplx(cs.w_tilde(j), cs.w_tilde(fm.ND + j));
        V.tail(fm.NK + fm.NM) = at.bus_voltage;
        r.com = com_check(final_net, V, raw.options.com_threshold);
        for (const auto& w : r.com->warnings) r.warnings.push_back("COM: " + w);
        t_com = seconds_since(c0);
    }

    for (Method m : opt.methods) {
        MethodRow row{m, "skipped", std::nullopt, 0.0, ""};
        switch (m) {
            case Method::Analytic: {
                const Verdict& v = *r.analytic_verdict;
                row.verdict = v.stable() ? "stable" : "unstable";
                row.value = v.max_re;
                row.seconds = t_analytic;
                row.detail = std::string("Type ") + type_name(v.type) + "; " + v.rationale +
                             "; events " + std::to_string(r.total_events());
                break;
            }
            case Method::Tds:
                row.verdict = *r.tds_stable ? "stable" : "unstable";
                row.value = r.tds_excursion;
                row.seconds = t_tds;
                row.detail = "max COI-relative angle excursion (rad)";
                break;
            case Method::Dm:
                row.seconds = t_dm;
                if (r.dm) {
                    row.verdict = r.dm->certified ? "certified" : "undetermined";
                    row.value = r.dm->V_margin;
                    row.detail = "V_cr " + std::to_string(r.dm->V_cr) + ", V_cl " + std::to_string(r.dm->V_cl);
                } else {
                    row.verdict = "undetermined";
                    row.detail = "no equilibrium";
                }
                break;
            case Method::Com:
                row.seconds = t_com;
                row.verdict = r.com->certified ? "certified" : "undetermined";
                row.value = r.com->delta_max;
                row.detail = "threshold " + std::to_string(r.com->threshold) + ", ||L+P|| " + std::to_string(r.com->sync_condition);
                break;
        }
        r.rows.push_back(row);
    }
    return r;
}

}  // namespace swing
