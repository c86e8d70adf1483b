#include "swing/steady_state.hpp"

#include <cmath>

#include "swing/cartesian_swing.hpp"

namespace swing {

namespace {

// Net scheduled complex power per bus and constant-current draws for the flow.
struct FlowData {
    CMat Y;
    CVec s_load;  // constant-power demand
    CVec i_load;  // constant-current draw
    Vec p_gen;    // scheduled generation (PV buses)
};

FlowData flow_data(const NetworkModel& model) {
    const auto& raw = model.raw;
    const int n = static_cast<int>(raw.buses.size());
    FlowData f;
    f.Y = CMat::Zero(n, n);
    f.s_load = CVec::Zero(n);
    f.i_load = CVec::Zero(n);
    f.p_gen = Vec::Zero(n);
    for (const auto& rb : raw.branches) {
        if (!rb.in_service) continue;
        const int a = raw.bus_index(rb.from), b = raw.bus_index(rb.to);
        const cplx y = raw.options.lossless ? lossless_admittance(rb.y_series) : rb.y_series;
        f.Y(a, a) += y + cplx(0.0, 0.5 * rb.b_charging);
        f.Y(b, b) += y + cplx(0.0, 0.5 * rb.b_charging);
        f.Y(a, b) -= y;
        f.Y(b, a) -= y;
    }
    for (int i = 0; i < n; ++i) f.Y(i, i) += raw.buses[i].shunt;
    for (const auto& l : raw.loads) {
        const int i = raw.bus_index(l.bus);
        switch (l.category) {
            case LoadCategory::Induction:
            case LoadCategory::Remaining: f.s_load(i) += cplx(l.p, l.q); break;
            case LoadCategory::FreqTimeDependent: f.s_load(i) += cplx(l.d0, 0.0); break;
            case LoadCategory::ConstantZI:
                f.Y(i, i) += l.y_ci;
                f.i_load(i) += l.i_cc;
                break;
        }
    }
    for (const auto& g : raw.generators) f.p_gen(raw.bus_index(g.bus)) += g.p_gen;
    return f;
}

}  // namespace

OperatingPoint solve_power_flow(const NetworkModel& model, const PowerFlowOptions& opt) {
    const auto& raw = model.raw;
    const int n = static_cast<int>(raw.buses.size());
    const FlowData f = flow_data(model);

    Vec Vm(n), Va(n);
    std::vector<int> pvpq, pq;
    for (int i = 0; i < n; ++i) {
        const auto& b = raw.buses[i];
        Vm(i) = b.type == BusType::PQ ? 1.0 : b.v_set;
        Va(i) = b.type == BusType::Slack ? b.angle_set : 0.0;
        if (b.type != BusType::Slack) pvpq.push_back(i);
        if (b.type == BusType::PQ) pq.push_back(i);
    }
    const int npv = static_cast<int>(pvpq.size()), npq = static_cast<int>(pq.size());
    CVec S_spec(n);
    for (int i = 0; i < n; ++i) S_spec(i) = cplx(f.p_gen(i), 0.0) - f.s_load(i);

    auto voltages = [&] {
        CVec V(n);
        for (int i = 0; i < n; ++i) V(i) = std::polar(Vm(i), Va(i));
        return V;
    };
    auto mismatch = [&](const CVec& V) {
        const CVec I = f.Y * V;
        CVec S(n);
        for (int i = 0; i < n; ++i) S(i) = V(i) * std::conj(I(i)) + V(i) * std::conj(f.i_load(i));
        Vec F(npv + npq);
        for (int r = 0; r < npv; ++r) F(r) = (S(pvpq[r]) - S_spec(pvpq[r])).real();
        for (int r = 0; r < npq; ++r) F(npv + r) = (S(pq[r]) - S_spec(pq[r])).imag();
        return F;
    };

    OperatingPoint op;
    CVec V = voltages();
    Vec F = mismatch(V);
    int it = 0;
    for (; !(F.lpNorm<Eigen::Infinity>() <= opt.tolerance); ++it) {
        if (it >= opt.max_iterations || !F.allFinite())
            throw NumericalError("power flow did not converge after " + std::to_string(it) +
                                 " iterations; final mismatch " + std::to_string(F.lpNorm<Eigen::Infinity>()));
        const CVec I = f.Y * V;
        CMat dS_dVa(n, n), dS_dVm(n, n);
        {
            const CMat diagV = V.asDiagonal();
            CVec Vn(n);
            for (int i = 0; i < n; ++i) Vn(i) = V(i) / Vm(i);
            const CMat diagI = I.asDiagonal();
            dS_dVa = cplx(0, 1) * diagV * (diagI - f.Y * diagV).conjugate();
            dS_dVm = diagV * (f.Y * Vn.asDiagonal()).conjugate() + diagI.conjugate() * Vn.asDiagonal();
            for (int i = 0; i < n; ++i) {
                const cplx s = V(i) * std::conj(f.i_load(i));
                dS_dVa(i, i) += cplx(0, 1) * s;
                dS_dVm(i, i) += s / Vm(i);
            }
        }
        Mat Jm(npv + npq, npv + npq);
        for (int r = 0; r < npv; ++r) {
            for (int c = 0; c < npv; ++c) Jm(r, c) = dS_dVa(pvpq[r], pvpq[c]).real();
            for (int c = 0; c < npq; ++c) Jm(r, npv + c) = dS_dVm(pvpq[r], pq[c]).real();
        }
        for (int r = 0; r < npq; ++r) {
            for (int c = 0; c < npv; ++c) Jm(npv + r, c) = dS_dVa(pq[r], pvpq[c]).imag();
            for (int c = 0; c < npq; ++c) Jm(npv + r, npv + c) = dS_dVm(pq[r], pq[c]).imag();
        }
        const Vec dx = Jm.partialPivLu().solve(-F);
        for (int r = 0; r < npv; ++r) Va(pvpq[r]) += dx(r);
        for (int r = 0; r < npq; ++r) Vm(pq[r]) += dx(npv + r);
        V = voltages();
        F = mismatch(V);
    }
    op.iterations = it;
    op.mismatch = F.lpNorm<Eigen::Infinity>();
    op.bus_voltage = V;

    // per-unit terminal injections
    const CVec I = f.Y * V;
    CVec S_bus(n);
    for (int i = 0; i < n; ++i) S_bus(i) = V(i) * std::conj(I(i)) + V(i) * std::conj(f.i_load(i)) + f.s_load(i);
    const int nU = model.n_ibus();
    op.p_inj = Vec::Zero(nU);
    op.q_inj = Vec::Zero(nU);
    std::vector<int> gens_at(n, 0);
    for (const auto& u : model.units)
        if (u.kind == UnitKind::Generator) ++gens_at[raw.bus_index(u.bus_id)];
    std::vector<cplx> remaining(S_bus.data(), S_bus.data() + n);
    for (int k = 0; k < nU; ++k) {
        const auto& u = model.units[k];
        if (u.kind == UnitKind::Induction) {
            const auto& l = raw.loads[u.source];
            op.p_inj(k) = -l.p;
            op.q_inj(k) = -l.q;
        }
    }
    // one generator takes its bus balance; with several, the first one does and
    // the others keep their schedule.  Reactive power is shared evenly.
    std::vector<int> first_gen(n, -1);
    std::vector<double> scheduled(n, 0.0);
    for (int k = 0; k < nU; ++k) {
        const auto& u = model.units[k];
        if (u.kind != UnitKind::Generator) continue;
        const int b = raw.bus_index(u.bus_id);
        if (first_gen[b] < 0) {
            first_gen[b] = k;
        } else {
            op.p_inj(k) = u.p_sched;
            scheduled[b] += u.p_sched;
        }
        op.q_inj(k) = remaining[b].imag() / gens_at[b];
    }
    for (int b = 0; b < n; ++b)
        if (first_gen[b] >= 0) op.p_inj(first_gen[b]) = remaining[b].real() - scheduled[b];

    // internal voltages from the terminal state
    op.E = Vec::Zero(nU);
    op.delta = Vec::Zero(model.NI);
    op.omega = Vec::Zero(model.NI);
    op.w_tilde = Vec::Zero(2 * model.ND);
    const bool from_flow = raw.options.internal_voltage == InternalVoltage::PowerFlow;
    for (int k = 0; k < nU; ++k) {
        const auto& u = model.units[k];
        const cplx Vt = V(raw.bus_index(u.bus_id));
        double E = u.E, delta = 0.0;
        if (u.kind == UnitKind::FreqLoad) {
            E = E > 0.0 ? E : std::abs(Vt);
            delta = std::arg(Vt) + u.gamma;
        } else if (from_flow) {
            const cplx Iinj = std::conj(cplx(op.p_inj(k), op.q_inj(k)) / Vt);
            const cplx Ec = Vt + Iinj / u.y_link;
            E = std::abs(Ec);
            delta = std::arg(Ec);
        } else {
            // P = g E^2 + |y| E |V| sin(delta - theta - gamma), solved for delta
            const double s = (op.p_inj(k) - u.g * E * E) / (u.ymag * E * std::abs(Vt));
            if (std::abs(s) > 1.0)
                throw NumericalError("machine at bus " + std::to_string(u.bus_id) +
                                     " cannot deliver its scheduled power with the given E");
            delta = std::arg(Vt) + u.gamma + std::asin(s);
        }
        op.E(k) = E;
        if (k < model.NI) {
            op.delta(k) = delta;
        } else {
            const int j = k - model.NI;
            op.w_tilde(j) = E * std::cos(delta - u.gamma);
            op.w_tilde(model.ND + j) = E * std::sin(delta - u.gamma);
        }
    }
    op.p_mech = Vec::Zero(model.NI);
    return op;
}

Vec machine_w(const NetworkModel& model, const Vec& delta) {
    const int NI = model.NI;
    Vec w(2 * NI);
    for (int i = 0; i < NI; ++i) {
        const auto [x, y] = to_loss_frame(model.units[i].E, delta(i), model.units[i].gamma);
        w(i) = x;
        w(NI + i) = y;
    }
    return w;
}

PreFault initialize(const NetworkModel& model_in, const PowerFlowOptions& opt) {
    PreFault pf;
    pf.model = model_in;
    pf.op = solve_power_flow(pf.model, opt);
    for (int k = 0; k < pf.model.n_ibus(); ++k) pf.model.units[k].E = pf.op.E(k);
    pf.model.loads = categorize_loads(pf.model.raw, pf.model, pf.op.bus_voltage);
    pf.network = prepare_network(pf.model);
    pf.op.w = machine_w(pf.model, pf.op.delta);

    // resolve p_mech against the model's own pre-fault network
    const auto& vm = pf.network.vmap;
    CVec wall(pf.model.n_ibus());
    const int NI = pf.model.NI, ND = pf.model.ND;
    for (int i = 0; i < NI; ++i) wall(i) = cplx(pf.op.w(i), pf.op.w(NI + i));
    for (int j = 0; j < ND; ++j) wall(NI + j) = cplx(pf.op.w_tilde(j), pf.op.w_tilde(ND + j));
    const CVec v = vm.bus_voltages(wall);
    for (int i = 0; i < NI; ++i) {
        auto& u = pf.model.units[i];
        const cplx vk = v(u.k);
        const double pe = u.g * u.E * u.E + u.ymag * (wall(i).imag() * vk.real() - wall(i).real() * vk.imag());
        if (!u.p_mech) u.p_mech = pe;
        pf.op.p_mech(i) = *u.p_mech;
    }
    pf.network.model = pf.model;
    return pf;
}

NetworkModel apply_disturbance(const NetworkModel& model, const Disturbance& d) {
    NetworkModel m = model;
    auto node_of = [&](int bus) {
        auto it = m.bus_node.find(bus);
        if (it == m.bus_node.end()) throw ValidationError("disturbance references missing bus " + std::to_string(bus));
        return it->second;
    };
    auto set_line = [&](bool on) {
        bool found = false;
        for (size_t i = 0; i < m.raw.branches.size(); ++i) {
            auto& rb = m.raw.branches[i];
            if ((rb.from == d.from && rb.to == d.to) || (rb.from == d.to && rb.to == d.from)) {
                rb.in_service = on;
                for (auto& br : m.branches)
                    if (br.source == static_cast<int>(i)) br.in_service = on;
                found = true;
            }
        }
        if (!found)
            throw ValidationError("no branch between buses " + std::to_string(d.from) + " and " + std::to_string(d.to));
    };
    switch (d.kind) {
        case Disturbance::Kind::LoadScale: {
            node_of(d.bus);
            if (!(d.factor >= 0.0)) throw ValidationError("load scale factor must be non-negative");
            for (auto& l : m.raw.loads)
                if (l.bus == d.bus && l.category != LoadCategory::Induction) {
                    l.p *= d.factor;
                    l.q *= d.factor;
                    l.i_cc *= d.factor;
                    l.y_ci *= d.factor;
                    l.d0 *= d.factor;
                }
            if (m.loads) {
                for (auto& r : m.loads->remaining)
                    if (r.bus == d.bus) {
                        r.i0 *= d.factor;
                        r.y0 *= d.factor;
                    }
                for (auto& c : m.loads->constant_ci)
                    if (c.bus == d.bus) {
                        c.i_cc *= d.factor;
                        c.y_ci *= d.factor;
                    }
            }
            break;
        }
        case Disturbance::Kind::Fault:
            m.fault_admittance[node_of(d.bus)] =
                d.fault_admittance.value_or(cplx(m.raw.options.fault_admittance, 0.0));
            break;
        case Disturbance::Kind::FaultClear: m.fault_admittance.erase(node_of(d.bus)); break;
        case Disturbance::Kind::LineOpen: set_line(false); break;
        case Disturbance::Kind::LineClose: set_line(true); break;
    }
    return m;
}

InitialState post_disturbance_state(const DynState& s, const NetworkState& net) {
    const auto& model = net.model;
    const int NI = model.NI, ND = model.ND;
    InitialState init;
    init.delta = s.delta;
    init.omega = s.omega;
    const Vec w = machine_w(model, s.delta);
    init.J = Mat::Zero(2 * NI, 2 * NI);
    for (int i = 0; i < NI; ++i) {
        init.J(i, NI + i) = s.omega(i);
        init.J(NI + i, i) = -s.omega(i);
    }
    init.z.resize(4 * NI + 2 * ND);
    init.z << w, -init.J * w, s.w_tilde;

    CVec wall(NI + ND);
    for (int i = 0; i < NI; ++i) wall(i) = cplx(w(i), w(NI + i));
    for (int j = 0; j < ND; ++j) wall(NI + j) = cplx(s.w_tilde(j), s.w_tilde(ND + j));
    init.bus_voltage = net.vmap.bus_voltages(wall);
    init.O = observation_O(model, w, s.omega, init.bus_voltage);
    init.O_tilde = observation_O_loads(model, s.w_tilde, init.bus_voltage);
    for (int i = 0; i < model.n_ibus(); ++i)
        if (net.part.isolated[model.units[i].k]) init.islanded = true;
    return init;
}

InitialState post_disturbance_state(const OperatingPoint& pre, const NetworkState& net) {
    return post_disturbance_state(DynState{pre.delta, pre.omega, pre.w_tilde}, net);
}

CVec original_bus_voltages(const NetworkModel& model, const CVec& km) {
    const auto& raw = model.raw;
    CVec V(raw.buses.size());
    for (size_t i = 0; i < raw.buses.size(); ++i) V(i) = km(model.bus_node.at(raw.buses[i].id) - model.n_ibus());
    return V;
}

}  // namespace swing
