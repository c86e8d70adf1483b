#include <fstream>
#include <sstream>

#include <json.hpp>

#include "swing/grid_model.hpp"

namespace swing {

using nlohmann::json;

namespace {

constexpr const char* kCaseFormat = "swingcart-case";
constexpr int kCaseVersion = 1;

std::string locate(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const json& need(const json& obj, const char* key, const std::string& at) {
    if (!obj.is_object() || !obj.contains(key)) throw ParseError(at + ": missing field '" + key + "'");
    return obj.at(key);
}

double num(const json& obj, const char* key, const std::string& at) {
    const json& v = need(obj, key, at);
    if (!v.is_number()) throw ParseError(at + "." + key + ": expected a number");
    return v.get<double>();
}

double num_or(const json& obj, const char* key, double dflt, const std::string& at) {
    if (!obj.contains(key)) return dflt;
    return num(obj, key, at);
}

int integer(const json& obj, const char* key, const std::string& at) {
    const json& v = need(obj, key, at);
    if (!v.is_number_integer()) throw ParseError(at + "." + key + ": expected an integer");
    return v.get<int>();
}

cplx pair_or(const json& obj, const char* key, cplx dflt, const std::string& at) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ParseError(at + "." + key + ": expected [real, imag] pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

json pair(cplx c) { return json::array({c.real(), c.imag()}); }

BusType bus_type(const std::string& s, const std::string& at) {
    if (s == "pq") return BusType::PQ;
    if (s == "pv") return BusType::PV;
    if (s == "slack") return BusType::Slack;
    throw ValidationError(at + ".type: unknown bus type '" + s + "'");
}

const char* bus_type_name(BusType t) {
    switch (t) {
        case BusType::PQ: return "pq";
        case BusType::PV: return "pv";
        case BusType::Slack: return "slack";
    }
    return "pq";
}

LoadCategory category(const std::string& s, const std::string& at) {
    if (s == "I" || s == "induction") return LoadCategory::Induction;
    if (s == "II" || s == "frequency" || s == "time") return LoadCategory::FreqTimeDependent;
    if (s == "III" || s == "constant_zi") return LoadCategory::ConstantZI;
    if (s == "IV" || s == "remaining") return LoadCategory::Remaining;
    throw ValidationError(at + ".category: unrecognized load category '" + s + "'");
}

const char* category_name(LoadCategory c) {
    switch (c) {
        case LoadCategory::Induction: return "I";
        case LoadCategory::FreqTimeDependent: return "II";
        case LoadCategory::ConstantZI: return "III";
        case LoadCategory::Remaining: return "IV";
    }
    return "IV";
}

}  // namespace

RawCase parse_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("case file: malformed JSON at " + locate(text, e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError("case file: top level must be an object");
    if (doc.value("format", std::string()) != kCaseFormat)
        throw ParseError(std::string("case file: 'format' must be \"") + kCaseFormat + "\"");
    if (integer(doc, "version", "case") != kCaseVersion)
        throw ParseError("case file: unsupported version " + doc["version"].dump());

    RawCase raw;
    raw.name = doc.value("name", std::string());
    raw.base_mva = num(doc, "base_mva", "case");
    if (!(raw.base_mva > 0.0)) throw ValidationError("case.base_mva must be positive");
    std::string units = doc.value("power_units", std::string("pu"));
    double scale = 1.0;
    if (units == "MW") scale = 1.0 / raw.base_mva;
    else if (units != "pu") throw ParseError("case.power_units: expected \"pu\" or \"MW\"");

    if (doc.contains("options")) {
        const json& o = doc["options"];
        const std::string at = "options";
        auto& opt = raw.options;
        if (o.contains("lossless")) opt.lossless = o["lossless"].get<bool>();
        opt.fault_admittance = num_or(o, "fault_admittance", opt.fault_admittance, at);
        opt.com_threshold = num_or(o, "com_threshold", opt.com_threshold, at);
        opt.m_ref_default = num_or(o, "m_ref_default", opt.m_ref_default, at);
        const std::string iv = o.value("internal_voltage", std::string("table"));
        if (iv == "table") opt.internal_voltage = InternalVoltage::Table;
        else if (iv == "power_flow") opt.internal_voltage = InternalVoltage::PowerFlow;
        else throw ParseError("options.internal_voltage: expected \"table\" or \"power_flow\"");
    }

    const json& buses = need(doc, "buses", "case");
    if (!buses.is_array()) throw ParseError("case.buses: expected an array");
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string at = "buses[" + std::to_string(i) + "]";
        const json& b = buses[i];
        BusRecord r;
        r.id = integer(b, "id", at);
        r.type = bus_type(need(b, "type", at).get<std::string>(), at);
        r.shunt = pair_or(b, "shunt", {0.0, 0.0}, at);
        r.v_set = num_or(b, "v_set", 1.0, at);
        r.angle_set = num_or(b, "angle_set", 0.0, at);
        raw.buses.push_back(r);
    }
    const json& branches = need(doc, "branches", "case");
    if (!branches.is_array()) throw ParseError("case.branches: expected an array");
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const std::string at = "branches[" + std::to_string(i) + "]";
        const json& b = branches[i];
        BranchRecord r;
        r.from = integer(b, "from", at);
        r.to = integer(b, "to", at);
        need(b, "y", at);
        r.y_series = pair_or(b, "y", {0.0, 0.0}, at);
        r.b_charging = num_or(b, "b_charging", 0.0, at);
        r.in_service = b.value("status", 1) != 0;
        raw.branches.push_back(r);
    }
    if (doc.contains("generators")) {
        const json& gens = doc["generators"];
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const std::string at = "generators[" + std::to_string(i) + "]";
            const json& g = gens[i];
            GeneratorRecord r;
            r.bus = integer(g, "bus", at);
            r.M = num(g, "M", at);
            r.D = num(g, "D", at);
            r.g_ii = num_or(g, "g_ii", 0.0, at);
            r.b_ii = num(g, "b_ii", at);
            r.E = num(g, "E", at);
            r.p_gen = num_or(g, "p_gen", 0.0, at) * scale;
            if (g.contains("p_mech")) r.p_mech = num(g, "p_mech", at) * scale;
            raw.generators.push_back(r);
        }
    }
    if (doc.contains("loads")) {
        const json& loads = doc["loads"];
        for (std::size_t i = 0; i < loads.size(); ++i) {
            const std::string at = "loads[" + std::to_string(i) + "]";
            const json& l = loads[i];
            LoadRecord r;
            r.bus = integer(l, "bus", at);
            r.category = category(need(l, "category", at).get<std::string>(), at);
            r.p = num_or(l, "p", 0.0, at) * scale;
            r.q = num_or(l, "q", 0.0, at) * scale;
            r.i_cc = pair_or(l, "i_cc", {0.0, 0.0}, at);
            r.y_ci = pair_or(l, "y_ci", {0.0, 0.0}, at);
            r.admittance_fraction = num_or(l, "admittance_fraction", 1.0, at);
            r.m = num_or(l, "m", 0.0, at);
            r.d0 = num_or(l, "d0", 0.0, at) * scale;
            if (l.contains("m_ref")) r.m_ref = num(l, "m_ref", at);
            r.M = num_or(l, "M", 0.0, at);
            r.D = num_or(l, "D", 0.0, at);
            r.g = num_or(l, "g", 0.0, at);
            r.b = num_or(l, "b", 0.0, at);
            r.E = num_or(l, "E", 0.0, at);
            raw.loads.push_back(r);
        }
    }
    validate_case(raw);
    return raw;
}

std::string serialize_case(const RawCase& raw) {
    json doc;
    doc["format"] = kCaseFormat;
    doc["version"] = kCaseVersion;
    doc["name"] = raw.name;
    doc["base_mva"] = raw.base_mva;
    doc["power_units"] = "pu";
    const auto& o = raw.options;
    doc["options"] = {{"lossless", o.lossless},
                      {"fault_admittance", o.fault_admittance},
                      {"com_threshold", o.com_threshold},
                      {"m_ref_default", o.m_ref_default},
                      {"internal_voltage", o.internal_voltage == InternalVoltage::Table ? "table" : "power_flow"}};
    json buses = json::array();
    for (const auto& b : raw.buses)
        buses.push_back({{"id", b.id},
                         {"type", bus_type_name(b.type)},
                         {"shunt", pair(b.shunt)},
                         {"v_set", b.v_set},
                         {"angle_set", b.angle_set}});
    doc["buses"] = buses;
    json branches = json::array();
    for (const auto& b : raw.branches)
        branches.push_back({{"from", b.from},
                            {"to", b.to},
                            {"y", pair(b.y_series)},
                            {"b_charging", b.b_charging},
                            {"status", b.in_service ? 1 : 0}});
    doc["branches"] = branches;
    json gens = json::array();
    for (const auto& g : raw.generators) {
        json j = {{"bus", g.bus}, {"M", g.M},       {"D", g.D},         {"g_ii", g.g_ii},
                  {"b_ii", g.b_ii}, {"E", g.E},     {"p_gen", g.p_gen}};
        if (g.p_mech) j["p_mech"] = *g.p_mech;
        gens.push_back(j);
    }
    doc["generators"] = gens;
    json loads = json::array();
    for (const auto& l : raw.loads) {
        json j = {{"bus", l.bus}, {"category", category_name(l.category)}};
        switch (l.category) {
            case LoadCategory::Induction:
                j.update({{"p", l.p}, {"q", l.q}, {"M", l.M}, {"D", l.D}, {"g", l.g}, {"b", l.b}, {"E", l.E}});
                break;
            case LoadCategory::FreqTimeDependent:
                j.update({{"m", l.m}, {"d0", l.d0}, {"g", l.g}, {"b", l.b}});
                if (l.m_ref) j["m_ref"] = *l.m_ref;
                break;
            case LoadCategory::ConstantZI:
                j.update({{"i_cc", pair(l.i_cc)}, {"y_ci", pair(l.y_ci)}});
                break;
            case LoadCategory::Remaining:
                j.update({{"p", l.p}, {"q", l.q}, {"admittance_fraction", l.admittance_fraction}});
                break;
        }
        loads.push_back(j);
    }
    doc["loads"] = loads;
    return doc.dump(2);
}

RawCase load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open case file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_case(ss.str());
    } catch (const InputError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace swing
