#pragma once

#include <random>
#include <string>

#include "swing/cli_io.hpp"

namespace fx {

using namespace swing;

inline std::string data(const std::string& rel) { return std::string(SWINGCART_DATA_DIR) + "/" + rel; }

inline RawCase ieee9() { return load_case_file(data("ieee9.json")); }

inline DisturbanceScript scenario(const std::string& name) {
    return load_disturbances(data("scenarios/" + name + ".json"));
}

inline DynState start_state(const PreFault& pf) { return {pf.op.delta, pf.op.omega, pf.op.w_tilde}; }

// Post-disturbance network, initial state and assembled system for one event on the 9-bus case.
struct Staged {
    PreFault pf;
    NetworkState net;
    InitialState init;
    SwingSystem sys;
};

inline Staged stage(const RawCase& raw, const Disturbance& d) {
    Staged s{initialize(build_network_model(raw)), {}, {}, {}};
    s.net = prepare_network(apply_disturbance(s.pf.model, d));
    s.init = post_disturbance_state(s.pf.op, s.net);
    s.sys = assemble_system(s.net.model, s.net.vmap, s.init.O, s.init.O_tilde);
    return s;
}

inline Disturbance load_scale(int bus, double factor, double t = 1.0) {
    Disturbance d;
    d.kind = Disturbance::Kind::LoadScale;
    d.bus = bus;
    d.factor = factor;
    d.time = t;
    return d;
}

inline Disturbance fault(int bus, double t = 1.0) {
    Disturbance d;
    d.kind = Disturbance::Kind::Fault;
    d.bus = bus;
    d.time = t;
    return d;
}

// Slack machine at bus 1 feeding a load at bus 2.
inline RawCase smib(double D = 0.05, double p_load = 0.5, double q_load = 0.1) {
    RawCase r;
    r.name = "smib";
    r.buses = {{1, BusType::Slack, {0, 0}, 1.0, 0.0}, {2, BusType::PQ, {0, 0}, 1.0, 0.0}};
    r.branches = {{1, 2, {0.0, -10.0}, 0.0, true}};
    GeneratorRecord g;
    g.bus = 1;
    g.M = 0.2;
    g.D = D;
    g.b_ii = -5.0;
    g.E = 1.1;
    r.generators = {g};
    LoadRecord l;
    l.bus = 2;
    l.p = p_load;
    l.q = q_load;
    r.loads = {l};
    r.options.lossless = true;
    return r;
}

// Random connected network: machines on buses 1..ng (bus 1 slack), loads elsewhere.
// reactive_only keeps the reduced network purely susceptive (energy function exact).
inline RawCase random_case(std::mt19937& rng, int ng, int nb, bool reactive_only = false) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    RawCase r;
    r.name = "random";
    for (int i = 1; i <= nb; ++i) {
        BusRecord b;
        b.id = i;
        b.type = i == 1 ? BusType::Slack : i <= ng ? BusType::PV : BusType::PQ;
        b.v_set = i <= ng ? 1.0 + 0.04 * U(rng) : 1.0;
        r.buses.push_back(b);
    }
    auto line = [&](int a, int b) {
        BranchRecord br;
        br.from = a;
        br.to = b;
        br.y_series = {reactive_only ? 0.0 : 1.0 * U(rng), -(8.0 + 8.0 * U(rng))};
        r.branches.push_back(br);
    };
    for (int i = 2; i <= nb; ++i) line(1 + static_cast<int>(U(rng) * (i - 1)) % (i - 1), i);
    for (int e = 0; e < nb / 2; ++e) {
        const int a = 1 + static_cast<int>(U(rng) * nb) % nb, b = 1 + static_cast<int>(U(rng) * nb) % nb;
        if (a != b) line(a, b);
    }
    double p_total = 0.0;
    for (int i = ng + 1; i <= nb; ++i) {
        LoadRecord l;
        l.bus = i;
        if (reactive_only) {
            l.category = LoadCategory::ConstantZI;
            l.y_ci = {0.0, -0.2 * U(rng)};
        } else {
            l.p = 0.2 + 0.3 * U(rng);
            l.q = 0.1 * U(rng);
            p_total += l.p;
        }
        r.loads.push_back(l);
    }
    for (int i = 1; i <= ng; ++i) {
        GeneratorRecord g;
        g.bus = i;
        g.M = 0.1 + 0.4 * U(rng);
        g.D = 0.02 + 0.1 * U(rng);
        g.b_ii = -(6.0 + 10.0 * U(rng));
        g.E = 1.05 + 0.05 * U(rng);
        g.p_gen = i == 1 ? 0.0 : p_total / ng;
        if (reactive_only) g.p_mech = 0.0;
        r.generators.push_back(g);
    }
    r.options.lossless = reactive_only;
    return r;
}

// Two decoupled damped oscillators x'' + c x' + k_x x = 0 (and y likewise) in SwingSystem form.
inline SwingSystem oscillator(double kx, double ky, double c) {
    SwingSystem s;
    s.NI = 1;
    s.ND = 0;
    s.L = Eigen::Vector2d(kx, ky).asDiagonal();
    s.l = Vec::Zero(2);
    s.Lt.resize(0, 0);
    s.lt.resize(0);
    s.D_over_M = Vec::Constant(1, c);
    s.T = Mat::Zero(4, 4);
    s.T.topRightCorner(2, 2).setIdentity();
    s.T.bottomLeftCorner(2, 2) = -s.L;
    s.T.bottomRightCorner(2, 2) = -c * Mat::Identity(2, 2);
    s.b = Vec::Zero(4);
    return s;
}

// Voltage map of a system without network buses.
inline VoltageMap empty_map(int NI) {
    VoltageMap vm;
    vm.NI = NI;
    vm.Hc = CMat::Zero(0, NI);
    vm.offset = CVec::Zero(0);
    vm.gamma = Vec::Zero(NI);
    return vm;
}

inline Mat random_matrix(std::mt19937& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> N(0.0, scale);
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    return A;
}

}  // namespace fx
