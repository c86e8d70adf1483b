#include "swing/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace swing {

namespace {

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

cplx lossless_admittance(cplx y) {
    if (y == cplx(0.0, 0.0)) return y;
    const double x = (1.0 / y).imag();
    return 1.0 / cplx(0.0, x);
}

int RawCase::bus_index(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    throw ValidationError("unknown bus id " + std::to_string(id));
}

void validate_case(const RawCase& raw) {
    if (!(raw.base_mva > 0.0)) throw ValidationError("base_mva must be positive");
    if (raw.buses.empty()) throw ValidationError("case has no buses");
    if (raw.branches.empty()) throw ValidationError("case has no branches (machines are disconnected)");
    std::set<int> ids;
    int n_slack = 0;
    for (const auto& b : raw.buses) {
        if (!ids.insert(b.id).second) throw ValidationError("duplicate bus id " + std::to_string(b.id));
        if (b.type == BusType::Slack) ++n_slack;
    }
    if (n_slack != 1) throw ValidationError("exactly one slack bus required, found " + std::to_string(n_slack));
    for (size_t i = 0; i < raw.branches.size(); ++i) {
        const auto& br = raw.branches[i];
        if (!ids.count(br.from) || !ids.count(br.to))
            throw ValidationError("branches[" + std::to_string(i) + "] references a missing bus (" +
                                  std::to_string(br.from) + "-" + std::to_string(br.to) + ")");
        if (br.from == br.to) throw ValidationError("branches[" + std::to_string(i) + "] is a self loop");
    }
    for (size_t i = 0; i < raw.generators.size(); ++i) {
        const auto& g = raw.generators[i];
        const std::string at = "generators[" + std::to_string(i) + "]";
        if (!ids.count(g.bus)) throw ValidationError(at + " references missing bus " + std::to_string(g.bus));
        if (!(g.M > 0.0)) throw ValidationError(at + ": M must be positive");
        if (!(g.E > 0.0)) throw ValidationError(at + ": E must be positive");
        if (g.D < 0.0) throw ValidationError(at + ": D must be non-negative");
        if (g.g_ii == 0.0 && g.b_ii == 0.0) throw ValidationError(at + ": internal admittance is zero");
    }
    for (size_t i = 0; i < raw.loads.size(); ++i) {
        const auto& l = raw.loads[i];
        const std::string at = "loads[" + std::to_string(i) + "]";
        if (!ids.count(l.bus)) throw ValidationError(at + " references missing bus " + std::to_string(l.bus));
        if (l.category == LoadCategory::Induction) {
            if (!(l.M > 0.0) || !(l.E > 0.0)) throw ValidationError(at + ": induction load needs M > 0 and E > 0");
            if (l.g == 0.0 && l.b == 0.0) throw ValidationError(at + ": induction load link admittance is zero");
        }
        if (l.category == LoadCategory::FreqTimeDependent) {
            if (!(l.m > 0.0)) throw ValidationError(at + ": frequency-dependent load needs m > 0");
            if (l.g == 0.0 && l.b == 0.0) throw ValidationError(at + ": frequency-dependent load link admittance is zero");
        }
        if (l.category == LoadCategory::Remaining && (l.admittance_fraction < 0.0 || l.admittance_fraction > 1.0))
            throw ValidationError(at + ": admittance_fraction outside [0,1]");
    }
}

NetworkModel build_network_model(const RawCase& raw) {
    validate_case(raw);
    NetworkModel m;
    m.raw = raw;
    m.Nb_original = static_cast<int>(raw.buses.size());

    // dynamic units: machines first, then frequency/time-dependent loads
    std::vector<DynamicUnit> machines, freq;
    for (size_t i = 0; i < raw.generators.size(); ++i) {
        const auto& g = raw.generators[i];
        DynamicUnit u;
        u.kind = UnitKind::Generator;
        u.source = static_cast<int>(i);
        u.bus_id = g.bus;
        u.M = g.M; u.D = g.D; u.g = g.g_ii; u.b = g.b_ii; u.E = g.E;
        u.p_mech = g.p_mech;
        u.p_sched = g.p_gen;
        machines.push_back(u);
    }
    const double mref_default = raw.options.m_ref_default;
    for (size_t i = 0; i < raw.loads.size(); ++i) {
        const auto& l = raw.loads[i];
        if (l.category == LoadCategory::Induction) {
            DynamicUnit u;
            u.kind = UnitKind::Induction;
            u.source = static_cast<int>(i);
            u.bus_id = l.bus;
            u.M = l.M; u.D = l.D; u.g = l.g; u.b = l.b; u.E = l.E;
            u.p_sched = -l.p;
            machines.push_back(u);
        } else if (l.category == LoadCategory::FreqTimeDependent) {
            DynamicUnit u;
            u.kind = UnitKind::FreqLoad;
            u.source = static_cast<int>(i);
            u.bus_id = l.bus;
            u.M = l.m_ref.value_or(mref_default);
            u.D = l.m;
            u.g = l.g; u.b = l.b;
            u.E = 0.0;  // taken from the operating voltage
            u.p_mech = 0.0;
            freq.push_back(u);
        }
    }
    m.NI = static_cast<int>(machines.size());
    m.ND = static_cast<int>(freq.size());
    m.units = machines;
    m.units.insert(m.units.end(), freq.begin(), freq.end());
    const int nI = m.n_ibus();

    std::set<int> kbus_ids;
    for (const auto& u : m.units) kbus_ids.insert(u.bus_id);

    for (int i = 0; i < nI; ++i) m.nodes.push_back({BusRole::Ibus, -1, -1});
    for (size_t i = 0; i < raw.buses.size(); ++i)
        if (kbus_ids.count(raw.buses[i].id)) {
            m.bus_node[raw.buses[i].id] = m.n_nodes();
            m.nodes.push_back({BusRole::Kbus, raw.buses[i].id, static_cast<int>(i)});
        }
    m.NK = m.n_nodes() - nI;
    for (size_t i = 0; i < raw.buses.size(); ++i)
        if (!kbus_ids.count(raw.buses[i].id)) {
            m.bus_node[raw.buses[i].id] = m.n_nodes();
            m.nodes.push_back({BusRole::Mbus, raw.buses[i].id, static_cast<int>(i)});
        }

    for (size_t i = 0; i < raw.branches.size(); ++i) {
        const auto& br = raw.branches[i];
        const cplx y = raw.options.lossless ? lossless_admittance(br.y_series) : br.y_series;
        const int a = m.bus_node.at(br.from), b = m.bus_node.at(br.to);
        const int src = static_cast<int>(i);
        if (m.nodes[a].role == BusRole::Kbus && m.nodes[b].role == BusRole::Kbus) {
            // split into two series halves of doubled admittance through a new Mbus
            const int mid = m.n_nodes();
            m.nodes.push_back({BusRole::Mbus, -1, -1});
            ++m.n_inserted;
            m.branches.push_back({a, mid, 2.0 * y, 0.5 * br.b_charging, 0.0, src, br.in_service});
            m.branches.push_back({mid, b, 2.0 * y, 0.0, 0.5 * br.b_charging, src, br.in_service});
        } else {
            m.branches.push_back({a, b, y, 0.5 * br.b_charging, 0.5 * br.b_charging, src, br.in_service});
        }
    }
    m.NM = m.n_nodes() - nI - m.NK;

    for (int i = 0; i < nI; ++i) {
        auto& u = m.units[i];
        u.node = i;
        u.kbus_node = m.bus_node.at(u.bus_id);
        u.k = u.kbus_node - nI;
        u.y_link = cplx(u.g, u.b);
        u.ymag = std::abs(u.y_link);
        u.gamma = wrap_angle(std::arg(u.y_link) + 0.5 * std::numbers::pi);
        m.branches.push_back({i, u.kbus_node, u.y_link, 0.0, 0.0, -1, true});
    }

    // a machine needs a path into the network
    for (const auto& u : m.units) {
        bool connected = false;
        for (const auto& br : m.branches)
            if (br.source >= 0 && br.in_service && (br.a == u.kbus_node || br.b == u.kbus_node)) connected = true;
        if (!connected)
            throw TopologyError("machine at bus " + std::to_string(u.bus_id) + " sits on an isolated bus");
    }
    return m;
}

LoadSet categorize_loads(const RawCase& raw, const NetworkModel& model, const CVec& voltages) {
    if (voltages.size() != static_cast<Eigen::Index>(raw.buses.size()))
        throw ValidationError("operating voltage vector does not match bus count");
    LoadSet ls;
    auto unit_of = [&](int load_index) {
        for (size_t u = 0; u < model.units.size(); ++u)
            if (model.units[u].kind != UnitKind::Generator && model.units[u].source == load_index)
                return static_cast<int>(u);
        throw ValidationError("load " + std::to_string(load_index) + " has no dynamic unit");
    };
    auto add_remaining = [&](int bus, cplx S, double alpha) {
        const cplx v0 = voltages(raw.bus_index(bus));
        if (std::abs(v0) < 1e-9)
            throw ValidationError("zero operating voltage at bus " + std::to_string(bus) + " (Taylor point)");
        const cplx y0 = alpha * std::conj(S) / std::norm(v0);
        const cplx i0 = (1.0 - alpha) * std::conj(S / v0);
        ls.remaining.push_back({bus, i0, y0});
    };
    for (size_t i = 0; i < raw.loads.size(); ++i) {
        const auto& l = raw.loads[i];
        switch (l.category) {
            case LoadCategory::Induction:
                ls.induction.push_back({l.bus, unit_of(static_cast<int>(i)), l.p, l.q});
                break;
            case LoadCategory::FreqTimeDependent:
                ls.freq_time_dependent.push_back(
                    {l.bus, unit_of(static_cast<int>(i)), l.m, l.d0, l.m_ref.value_or(raw.options.m_ref_default)});
                if (l.d0 != 0.0) add_remaining(l.bus, cplx(l.d0, 0.0), 1.0);
                break;
            case LoadCategory::ConstantZI:
                ls.constant_ci.push_back({l.bus, l.i_cc, l.y_ci});
                break;
            case LoadCategory::Remaining:
                if (l.p != 0.0 || l.q != 0.0) add_remaining(l.bus, cplx(l.p, l.q), l.admittance_fraction);
                break;
        }
    }
    return ls;
}

PartitionedAdmittance partition_admittance(const NetworkModel& model, const LoadSet& loads) {
    const int n = model.n_nodes();
    const int nI = model.n_ibus(), nK = model.NK, nM = model.NM;
    PartitionedAdmittance p;
    p.Y = CMat::Zero(n, n);
    std::vector<int> degree(n, 0);
    for (const auto& br : model.branches) {
        if (!br.in_service) continue;
        p.Y(br.a, br.a) += br.y + cplx(0.0, br.b_half_a);
        p.Y(br.b, br.b) += br.y + cplx(0.0, br.b_half_b);
        p.Y(br.a, br.b) -= br.y;
        p.Y(br.b, br.a) -= br.y;
        ++degree[br.a];
        ++degree[br.b];
    }
    for (size_t i = 0; i < model.raw.buses.size(); ++i) {
        const int node = model.bus_node.at(model.raw.buses[i].id);
        p.Y(node, node) += model.raw.buses[i].shunt;
    }

    CVec y0 = CVec::Zero(nK + nM), i0 = CVec::Zero(nK + nM);
    for (const auto& c : loads.constant_ci) {
        const int k = model.bus_node.at(c.bus) - nI;
        y0(k) += c.y_ci;
        i0(k) += c.i_cc;
    }
    for (const auto& r : loads.remaining) {
        const int k = model.bus_node.at(r.bus) - nI;
        y0(k) += r.y0;
        i0(k) += r.i0;
    }
    for (const auto& [node, yf] : model.fault_admittance) y0(node - nI) += yf;

    p.Y_II = p.Y.block(0, 0, nI, nI);
    p.Y_IK = p.Y.block(0, nI, nI, nK);
    p.Y_KI = p.Y.block(nI, 0, nK, nI);
    p.Y_KK = p.Y.block(nI, nI, nK, nK);
    p.Y_KM = p.Y.block(nI, nI + nK, nK, nM);
    p.Y_MK = p.Y.block(nI + nK, nI, nM, nK);
    p.Y_MM = p.Y.block(nI + nK, nI + nK, nM, nM);
    if (p.Y.block(0, nI + nK, nI, nM).cwiseAbs().maxCoeff() > 0.0)
        throw TopologyError("an Ibus is connected to an Mbus");
    p.y0_K = y0.head(nK);
    p.y0_M = y0.tail(nM);
    p.i0_K = i0.head(nK);
    p.i0_M = i0.tail(nM);
    p.isolated.assign(nK + nM, false);
    for (int k = 0; k < nK + nM; ++k) p.isolated[k] = degree[nI + k] == 0;
    return p;
}

Vec stack(const CVec& v) {
    Vec s(2 * v.size());
    s << v.real(), v.imag();
    return s;
}

CVec unstack(const Vec& v) {
    const Eigen::Index n = v.size() / 2;
    CVec c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = cplx(v(i), v(n + i));
    return c;
}

Mat stack_operator(const CMat& A) {
    Mat S(2 * A.rows(), 2 * A.cols());
    S << A.real(), -A.imag(), A.imag(), A.real();
    return S;
}

CVec VoltageMap::bus_voltages(const CVec& w_loss) const { return Hc * w_loss + offset; }

VoltageMap reduce_to_sensitivities(const PartitionedAdmittance& part, const NetworkModel& model) {
    const int nI = model.n_ibus(), nK = model.NK, nM = model.NM, nKM = nK + nM;
    CMat A(nKM, nKM);
    A << part.Y_KK, part.Y_KM, part.Y_MK, part.Y_MM;
    CVec y0(nKM), i0(nKM);
    y0 << part.y0_K, part.y0_M;
    i0 << part.i0_K, part.i0_M;
    A.diagonal() += y0;
    CMat B = CMat::Zero(nKM, nI);
    B.topRows(nK) = part.Y_KI;
    // internal voltages enter in the loss frame: v_I = e^{j gamma} w_I
    for (int i = 0; i < nI; ++i) B.col(i) *= std::polar(1.0, model.units[i].gamma);

    std::vector<int> live;
    for (int k = 0; k < nKM; ++k)
        if (!part.isolated[k]) live.push_back(k);
    const int nl = static_cast<int>(live.size());
    CMat Al(nl, nl), Bl(nl, nI);
    CVec il(nl);
    for (int r = 0; r < nl; ++r) {
        for (int c = 0; c < nl; ++c) Al(r, c) = A(live[r], live[c]);
        Bl.row(r) = B.row(live[r]);
        il(r) = i0(live[r]);
    }
    Eigen::FullPivLU<CMat> lu(Al);
    lu.setThreshold(1e-13);
    if (!lu.isInvertible()) {
        const CVec null = lu.kernel().col(0);
        Eigen::Index arg = 0;
        null.cwiseAbs().maxCoeff(&arg);
        const auto& node = model.nodes[nI + live[arg]];
        throw NumericalError("network matrix is singular (islanded subnetwork); null direction peaks at " +
                             (node.bus_id >= 0 ? "bus " + std::to_string(node.bus_id)
                                               : "model node " + std::to_string(nI + live[arg])));
    }
    const CMat Xl = -lu.solve(Bl);
    const CVec ol = -lu.solve(il);

    VoltageMap vm;
    vm.NI = model.NI;
    vm.ND = model.ND;
    vm.NK = nK;
    vm.NM = nM;
    vm.Hc = CMat::Zero(nKM, nI);
    vm.offset = CVec::Zero(nKM);
    for (int r = 0; r < nl; ++r) {
        vm.Hc.row(live[r]) = Xl.row(r);
        vm.offset(live[r]) = ol(r);
    }
    const int NI = model.NI, ND = model.ND;
    vm.H_KI = stack_operator(vm.Hc.topLeftCorner(nK, NI));
    vm.H_MI = stack_operator(vm.Hc.bottomLeftCorner(nM, NI));
    vm.H_KD = stack_operator(vm.Hc.topRightCorner(nK, ND));
    vm.H_MD = stack_operator(vm.Hc.bottomRightCorner(nM, ND));
    vm.vK_I = stack(vm.offset.head(nK));
    vm.vM_I = stack(vm.offset.tail(nM));
    vm.gamma.resize(nI);
    for (int i = 0; i < nI; ++i) vm.gamma(i) = model.units[i].gamma;
    vm.R = Mat::Zero(2 * NI, 2 * NI);
    for (int i = 0; i < NI; ++i) {
        const double c = std::cos(vm.gamma(i)), s = std::sin(vm.gamma(i));
        vm.R(i, i) = c;
        vm.R(i, NI + i) = -s;
        vm.R(NI + i, i) = s;
        vm.R(NI + i, NI + i) = c;
    }
    return vm;
}

NetworkState prepare_network(const NetworkModel& model) {
    if (!model.loads) throw ValidationError("loads are not categorized; solve the steady state first");
    NetworkState ns;
    ns.model = model;
    ns.part = partition_admittance(model, *model.loads);
    ns.vmap = reduce_to_sensitivities(ns.part, model);
    return ns;
}

}  // namespace swing
