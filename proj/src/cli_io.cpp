#include "swing/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace swing {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, int line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    // from_chars does not accept "inf"/"nan" spellings produced by to_chars on all libstdc++ builds
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError("trajectory line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string trajectory_csv(const Trajectory& t) {
    if (t.t.empty()) throw ValidationError("cannot export an empty trajectory");
    std::ostringstream os;
    const int NI = t.machines(), nb = static_cast<int>(t.vmag.cols());
    os << "# swingcart-trajectory v1 source=" << t.source << "\n";
    os << "t";
    for (int i = 0; i < NI; ++i) os << ",delta_" << i + 1;
    for (int i = 0; i < NI; ++i) os << ",omega_" << i + 1;
    for (int b = 0; b < nb; ++b) os << ",vmag_" << t.bus_ids[b];
    for (int b = 0; b < nb; ++b) os << ",vang_" << t.bus_ids[b];
    for (int i = 0; i < NI; ++i) os << ",O_" << i + 1;
    os << ",O1,eps\n";
    for (int k = 0; k < t.rows(); ++k) {
        os << fmt(t.t[k]);
        for (int i = 0; i < NI; ++i) os << ',' << fmt(t.delta(k, i));
        for (int i = 0; i < NI; ++i) os << ',' << fmt(t.omega(k, i));
        for (int b = 0; b < nb; ++b) os << ',' << fmt(t.vmag(k, b));
        for (int b = 0; b < nb; ++b) os << ',' << fmt(t.vang(k, b));
        for (int i = 0; i < NI; ++i) os << ',' << fmt(t.O(k, i));
        os << ',' << fmt(t.O1(k)) << ',' << fmt(t.eps(k)) << '\n';
    }
    return os.str();
}

Trajectory parse_trajectory_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Trajectory t;
    if (!std::getline(in, line) || line.rfind("# swingcart-trajectory v1", 0) != 0)
        throw ParseError("trajectory: missing '# swingcart-trajectory v1' header");
    const auto pos = line.find("source=");
    if (pos != std::string::npos) t.source = line.substr(pos + 7);
    if (!std::getline(in, line)) throw ParseError("trajectory: missing column header");
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    int NI = 0, nb = 0;
    for (const auto& c : cols) {
        if (c.rfind("delta_", 0) == 0) ++NI;
        if (c.rfind("vmag_", 0) == 0) {
            ++nb;
            t.bus_ids.push_back(std::stoi(c.substr(5)));
        }
    }
    const int ncol = 1 + 3 * NI + 2 * nb + 2;
    if (static_cast<int>(cols.size()) != ncol || cols[0] != "t") throw ParseError("trajectory: unexpected column layout");
    std::vector<std::vector<double>> rows;
    int ln = 2;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) r.push_back(parse_double(c, ln));
        if (static_cast<int>(r.size()) != ncol) throw ParseError("trajectory line " + std::to_string(ln) + ": wrong column count");
        rows.push_back(std::move(r));
    }
    const int n = static_cast<int>(rows.size());
    t.delta.resize(n, NI);
    t.omega.resize(n, NI);
    t.vmag.resize(n, nb);
    t.vang.resize(n, nb);
    t.O.resize(n, NI);
    t.O1.resize(n);
    t.eps.resize(n);
    for (int k = 0; k < n; ++k) {
        const auto& r = rows[k];
        int c = 0;
        t.t.push_back(r[c++]);
        for (int i = 0; i < NI; ++i) t.delta(k, i) = r[c++];
        for (int i = 0; i < NI; ++i) t.omega(k, i) = r[c++];
        for (int b = 0; b < nb; ++b) t.vmag(k, b) = r[c++];
        for (int b = 0; b < nb; ++b) t.vang(k, b) = r[c++];
        for (int i = 0; i < NI; ++i) t.O(k, i) = r[c++];
        t.O1(k) = r[c++];
        t.eps(k) = r[c++];
        if (k > 0 && !(t.t[k] > t.t[k - 1])) throw ParseError("trajectory: time grid is not strictly increasing");
    }
    return t;
}

void export_trajectory(const Trajectory& t, const std::string& path) { write_file(path, trajectory_csv(t)); }

Trajectory import_trajectory(const std::string& path) {
    try {
        return parse_trajectory_csv(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string events_csv(const ScenarioResult& r) {
    std::ostringstream os;
    os << "# swingcart-events v1\n";
    os << "stage,tau,trigger,O1,p_max,eps,g_before,g_after,iterations,T_norm,max_re\n";
    for (size_t s = 0; s < r.stages.size(); ++s)
        for (const auto& e : r.stages[s].run.events)
            os << s << ',' << fmt(e.tau) << ',' << trigger_name(e.trigger) << ',' << fmt(e.O1) << ',' << fmt(e.p_max) << ','
               << fmt(e.eps) << ',' << fmt(e.g_before) << ',' << fmt(e.g_after) << ',' << e.iterations << ','
               << fmt(e.T_norm) << ',' << fmt(e.max_re) << '\n';
    return os.str();
}

std::string report_json(const ScenarioResult& r) {
    json doc = {{"format", "swingcart-report"}, {"version", 1}, {"case", r.case_name}, {"t_end", r.stages.back().t_end}};
    json rows = json::array();
    for (const auto& m : r.rows)
        rows.push_back({{"method", method_name(m.method)},
                        {"verdict", m.verdict},
                        {"value", opt_num(m.value)},
                        {"seconds", m.seconds},
                        {"detail", m.detail}});
    doc["methods"] = rows;
    json stages = json::array();
    for (const auto& s : r.stages) {
        json js = {{"t_begin", s.t_begin},     {"t_end", s.t_end},
                   {"T_norm", s.T_norm},       {"max_re", finite_or_null(s.max_re)},
                   {"events", s.run.events.size()}, {"magnitude_events", s.o1_crossings},
                   {"eps_max_noreinit", s.eps_max_plain}, {"O1_max_noreinit", s.o1_max_plain}};
        stages.push_back(js);
    }
    doc["stages"] = stages;
    if (r.analytic_verdict) {
        const auto& v = *r.analytic_verdict;
        doc["analytic"] = {{"type", type_name(v.type)},
                           {"max_re", v.max_re},
                           {"dominant_coeff", v.dominant_coeff},
                           {"max_excursion", v.max_excursion},
                           {"T_op", v.T_op},
                           {"rationale", v.rationale}};
    }
    if (r.tds_stable) doc["tds"] = {{"stable", *r.tds_stable}, {"max_excursion", *r.tds_excursion}};
    if (r.dm)
        doc["dm"] = {{"V_cl", r.dm->V_cl}, {"V_cr", r.dm->V_cr}, {"V_margin", r.dm->V_margin},
                     {"kinetic", r.dm->kinetic}, {"critical_machine", r.dm->critical_machine},
                     {"certified", r.dm->certified}};
    if (r.com)
        doc["com"] = {{"delta_max", r.com->delta_max}, {"sync_condition", r.com->sync_condition},
                      {"threshold", r.com->threshold}, {"certified", r.com->certified},
                      {"components", r.com->components}};
    doc["warnings"] = r.warnings;
    return doc.dump(2) + "\n";
}

std::string report_text(const ScenarioResult& r) {
    std::ostringstream os;
    os << "case " << r.case_name << ", horizon " << r.stages.back().t_end << " s, " << r.stages.size() << " stage(s)\n";
    for (size_t s = 0; s < r.stages.size(); ++s) {
        const auto& st = r.stages[s];
        os << "  stage " << s << " [" << st.t_begin << ", " << st.t_end << "]  ||T||_F " << std::setprecision(5)
           << st.T_norm << "  max Re " << st.max_re << "  events " << st.run.events.size() << "  eps(no reinit) "
           << st.eps_max_plain << "\n";
    }
    os << std::left << std::setw(10) << "method" << std::setw(14) << "verdict" << std::setw(14) << "value"
       << std::setw(10) << "time[s]" << "detail\n";
    for (const auto& m : r.rows) {
        os << std::setw(10) << method_name(m.method) << std::setw(14) << m.verdict << std::setw(14)
           << (m.value ? fmt(std::round(*m.value * 1e4) / 1e4) : std::string("-")) << std::setw(10) << std::setprecision(3)
           << m.seconds << m.detail << "\n";
    }
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    return os.str();
}

std::string discrepancy_text(const Discrepancy& d) {
    std::ostringstream os;
    os << std::setprecision(6) << "samples " << d.samples << "\n"
       << "delta  max " << d.delta_max << " rad at t = " << d.t_delta_max << " s, mean " << d.delta_mean << "\n"
       << "omega  max " << d.omega_max << ", mean " << d.omega_mean << "\n"
       << "vmag   max " << d.vmag_max << ", mean " << d.vmag_mean << "\n";
    return os.str();
}

Report run_scenario(const ScenarioConfig& cfg) {
    Report rep;
    const RawCase raw = load_case_file(cfg.case_path);
    const DisturbanceScript script =
        cfg.disturbance_path.empty() ? DisturbanceScript{} : load_disturbances(cfg.disturbance_path);
    const std::string ctx = "scenario " + cfg.case_path + (cfg.disturbance_path.empty() ? "" : " + " + cfg.disturbance_path);
    try {
        rep.result = simulate(raw, script, cfg.options);
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + ": " + e.what());
    } catch (const TopologyError& e) {
        throw TopologyError(ctx + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + ": " + e.what());
    }
    if (!cfg.write_files) return rep;

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
    auto put = [&](const std::string& name, const std::string& text) {
        const std::string p = (fs::path(cfg.out_dir) / name).string();
        write_file(p, text);
        rep.files.push_back(p);
    };
    const auto& r = rep.result;
    put("report.json", report_json(r));
    put("report.txt", report_text(r));
    if (r.analytic) put("analytic.csv", trajectory_csv(*r.analytic));
    if (r.analytic_plain) put("analytic_noreinit.csv", trajectory_csv(*r.analytic_plain));
    if (r.tds) put("tds.csv", trajectory_csv(*r.tds));
    if (r.analytic) put("events.csv", events_csv(r));
    return rep;
}

}  // namespace swing
