#include "swing/stability_assessor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace swing {

namespace {
constexpr double kPi = std::numbers::pi;
}

CoiFrame coi_frame(const Vec& M, const Vec& delta, const Vec& omega) {
    CoiFrame f;
    f.M_T = M.sum();
    if (!(f.M_T > 0)) throw ValidationError("total inertia must be positive");
    f.delta_coi = M.dot(delta) / f.M_T;
    f.omega_coi = M.dot(omega) / f.M_T;
    f.delta_rel = delta.array() - f.delta_coi;
    f.omega_rel = omega.array() - f.omega_coi;
    return f;
}

const char* type_name(StabilityType t) {
    switch (t) {
        case StabilityType::I: return "I";
        case StabilityType::II: return "II";
        case StabilityType::III: return "III";
        case StabilityType::IV: return "IV";
        default: return "undetermined";
    }
}

namespace {

Vec angles_of(const Vec& z, int NI, const Vec& gamma) {
    Vec d(NI);
    for (int i = 0; i < NI; ++i) d(i) = std::atan2(z(NI + i), z(i)) + gamma(i);
    return d;
}

void unwrap_rows(Mat& A) {
    for (Eigen::Index k = 1; k < A.rows(); ++k)
        for (Eigen::Index i = 0; i < A.cols(); ++i) {
            double d = A(k, i) - A(k - 1, i);
            A(k, i) -= 2 * kPi * std::round(d / (2 * kPi));
        }
}

std::vector<double> grid(double a, double b, double dt) {
    std::vector<double> ts;
    const long n = std::max(1L, static_cast<long>(std::ceil((b - a) / dt - 1e-9)));
    for (long k = 0; k <= n; ++k) ts.push_back(std::min(a + k * dt, b));
    return ts;
}

Vec inertia(const NetworkModel& model) {
    Vec M(model.NI);
    for (int i = 0; i < model.NI; ++i) M(i) = model.units[i].M;
    return M;
}

double coefficient_mass(const AnalyticSolution& sol, double re_tol) {
    double m = 0.0;
    for (const auto& b : sol.spectrum.blocks)
        if (b.re > re_tol) m += sol.G.middleCols(b.pos, b.size).squaredNorm();
    return std::sqrt(m);
}

// Largest COI-relative angle excursion from the first row.
double excursion(const Mat& ang, const Vec& M, int* who) {
    double best = 0.0;
    for (Eigen::Index k = 0; k < ang.rows(); ++k) {
        const Vec row = ang.row(k).transpose();
        const Vec row0 = ang.row(0).transpose();
        const Vec rel = (row.array() - M.dot(row) / M.sum()) - (row0.array() - M.dot(row0) / M.sum());
        Eigen::Index i = 0;
        const double e = rel.cwiseAbs().maxCoeff(&i);
        if (e > best) {
            best = e;
            if (who) *who = static_cast<int>(i);
        }
    }
    return best;
}

Verdict spectral_verdict(const AnalyticSolution& sol, const ClassifyOptions& opt) {
    Verdict v;
    v.T_op = opt.T_op;
    v.max_re = sol.spectrum.max_real();
    v.dominant_coeff = coefficient_mass(sol, opt.re_tol);
    if (v.max_re <= opt.re_tol) {
        v.type = StabilityType::I;
        v.rationale = "all eigenvalues have non-positive real part";
    } else if (sol.Theta.norm() <= opt.theta_tol) {
        v.type = StabilityType::I;
        v.rationale = "Theta = 0: the disturbance excites no mode";
    } else if (1.0 / v.max_re >= opt.T_op) {
        v.type = StabilityType::II;
        v.rationale = "growth time constant 1/lambda_m = " + std::to_string(1.0 / v.max_re) + " s exceeds T_op";
    }
    return v;
}

void finish(Verdict& v, double exc, int who) {
    v.max_excursion = exc;
    if (v.type != StabilityType::Undetermined) return;
    if (exc < kPi) {
        v.type = StabilityType::III;
        v.rationale = "unstable modes present but the rotor-angle excursion stays below pi within T_op";
    } else {
        v.type = StabilityType::IV;
        v.runaway_machine = who;
        v.rationale = "rotor-angle excursion exceeds pi within T_op";
    }
}

}  // namespace

Mat angle_history(const MonitoredRun& run, const std::vector<double>& ts, Exec exec) {
    const int NI = run.net.model.NI;
    const Vec gamma = run.net.vmap.gamma.head(NI);
    Mat A(ts.size(), NI);
    const long n = static_cast<long>(ts.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long k = 0; k < n; ++k) A.row(k) = angles_of(run.z_at(ts[k]), NI, gamma).transpose();
    unwrap_rows(A);
    return A;
}

Verdict classify(const MonitoredRun& run, double t_from, const ClassifyOptions& opt) {
    // the segment with the largest growth rate decides the spectral part
    const Segment* worst = &run.segments.front();
    for (const auto& s : run.segments)
        if (s.sol.spectrum.max_real() > worst->sol.spectrum.max_real()) worst = &s;
    Verdict v = spectral_verdict(worst->sol, opt);
    const double t_to = std::min(t_from + opt.T_op, run.segments.back().t_end);
    int who = -1;
    const double exc = excursion(angle_history(run, grid(t_from, t_to, opt.sample_dt)), inertia(run.net.model), &who);
    finish(v, exc, who);
    return v;
}

Verdict classify(const AnalyticSolution& sol, const NetworkModel& model, const ClassifyOptions& opt) {
    Verdict v = spectral_verdict(sol, opt);
    const auto ts = grid(sol.t_origin, sol.t_origin + opt.T_op, opt.sample_dt);
    Mat A(ts.size(), sol.NI);
    for (size_t k = 0; k < ts.size(); ++k)
        A.row(k) = angles_of(evaluate_z(sol, ts[k]), sol.NI, sol.vmap.gamma.head(sol.NI)).transpose();
    unwrap_rows(A);
    int who = -1;
    finish(v, excursion(A, inertia(model), &who), who);
    return v;
}

SplitT bauer_fike(const Mat& T_sys, const Mat& T_op) {
    SplitT s;
    s.T_sys = T_sys;
    s.T_op = T_op;
    Eigen::EigenSolver<Mat> es(T_sys, true);
    if (es.info() != Eigen::Success) return s;
    const Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::MatrixXcd> sv(V);
    const auto& sig = sv.singularValues();
    s.kappa = sig(0) / sig(sig.size() - 1);
    s.diagonalizable = std::isfinite(s.kappa) && s.kappa < 1e12;
    s.op_norm = T_op.size() ? Eigen::JacobiSVD<Mat>(T_op).singularValues()(0) : 0.0;
    s.bound = s.kappa * s.op_norm;
    const Eigen::VectorXcd lam = es.eigenvalues();
    const Eigen::VectorXcd mu = Mat(T_sys - T_op).eigenvalues();
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        s.max_distance = std::max(s.max_distance, (lam.array() - mu(i)).abs().minCoeff());
    return s;
}

SplitT split_T(const SwingSystem& sys) {
    SwingSystem z = sys;
    z.p_term.setZero();
    z.pt_term.setZero();
    const SwingSystem net_only = with_frozen_O(z, Vec::Zero(sys.NI), Vec::Zero(sys.ND));
    return bauer_fike(net_only.T, Mat(net_only.T - sys.T));
}

std::vector<EigenCondition> eigen_condition(const Mat& T, double multiple_tol) {
    Eigen::EigenSolver<Mat> es(T, true);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration failed to converge");
    const Eigen::VectorXcd lam = es.eigenvalues();
    const Eigen::MatrixXcd V = es.eigenvectors();
    const Eigen::MatrixXcd W = V.inverse();  // rows are left eigenvectors (conjugated)
    std::vector<EigenCondition> out;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        EigenCondition c;
        c.lambda = lam(i);
        for (Eigen::Index j = 0; j < lam.size(); ++j)
            if (j != i && std::abs(lam(i) - lam(j)) <= multiple_tol * std::max(1.0, std::abs(lam(i)))) c.defined = false;
        const Eigen::VectorXcd r = V.col(i).normalized();
        const Eigen::RowVectorXcd l = W.row(i).normalized();
        c.s = std::abs((l * r)(0));
        c.inv_s = c.s > 0 ? 1.0 / c.s : std::numeric_limits<double>::infinity();
        out.push_back(c);
    }
    return out;
}

ComReport com_check(const NetworkState& net, const CVec& V, double threshold) {
    const auto& model = net.model;
    const int n = model.n_nodes(), nI = model.n_ibus();
    if (V.size() != n) throw ValidationError("COM check needs a voltage at every model node");
    ComReport r;
    r.threshold = threshold;

    Mat A = Mat::Zero(n, n);
    for (const auto& br : model.branches) {
        if (!br.in_service) continue;
        const double a = std::abs(br.y) * std::abs(V(br.a)) * std::abs(V(br.b));
        A(br.a, br.b) += a;
        A(br.b, br.a) += a;
    }
    Vec P = Vec::Zero(n);
    for (int i = 0; i < model.NI; ++i) P(i) = model.units[i].p_mech.value_or(0.0);
    const auto& part = net.part;
    for (int k = 0; k < model.NK + model.NM; ++k) {
        const cplx y0 = k < model.NK ? part.y0_K(k) : part.y0_M(k - model.NK);
        const cplx i0 = k < model.NK ? part.i0_K(k) : part.i0_M(k - model.NK);
        const cplx v = V(nI + k);
        P(nI + k) = -std::real(v * std::conj(y0 * v + i0));
    }

    // connected components
    std::vector<int> comp(n, -1);
    int nc = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> stack{s};
        comp[s] = nc;
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            for (int b = 0; b < n; ++b)
                if (A(a, b) > 0 && comp[b] < 0) comp[b] = nc, stack.push_back(b);
        }
        ++nc;
    }
    r.components = nc;
    if (nc > 1) r.warnings.push_back("coupling graph has " + std::to_string(nc) + " components; evaluated per component");

    Vec x = Vec::Zero(n);
    for (int c = 0; c < nc; ++c) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
            if (comp[i] == c) idx.push_back(i);
        const int m = static_cast<int>(idx.size());
        Mat Lc = Mat::Zero(m, m);
        Vec Pc(m);
        for (int a = 0; a < m; ++a) {
            Pc(a) = P(idx[a]);
            for (int b = 0; b < m; ++b) Lc(a, b) = -A(idx[a], idx[b]);
            Lc(a, a) = A.row(idx[a]).sum();
        }
        Pc.array() -= Pc.mean();
        const Vec xc = Eigen::CompleteOrthogonalDecomposition<Mat>(Lc).pseudoInverse() * Pc;
        for (int a = 0; a < m; ++a) x(idx[a]) = xc(a);
    }
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            if (A(a, b) <= 0) continue;
            r.sync_condition = std::max(r.sync_condition, std::abs(x(a) - x(b)));
            double d = std::arg(V(a)) - std::arg(V(b));
            d = std::remainder(d, 2 * kPi);
            r.delta_max = std::max(r.delta_max, std::abs(d));
        }
    r.certified = r.delta_max <= threshold;
    return r;
}

EnergyReport dm_margin(const NetworkState& net, const Vec& delta, const Vec& omega, const CVec& v_km) {
    const auto& model = net.model;
    const int NI = model.NI;
    EnergyReport e;
    e.delta_s.resize(NI);
    e.delta_u.resize(NI);
    const Vec M = inertia(model);
    const CoiFrame f = coi_frame(M, delta, omega);
    e.kinetic = 0.5 * M.dot(f.omega_rel.cwiseAbs2());
    e.V_cr = std::numeric_limits<double>::infinity();
    for (int i = 0; i < NI; ++i) {
        const auto& u = model.units[i];
        const cplx vk = v_km(u.k);
        const double a = u.ymag * u.E * std::abs(vk);
        const double pm = u.p_mech.value_or(0.0) - u.g * u.E * u.E;
        if (!(a > 0) || std::abs(pm) > a)
            throw NumericalError("no equilibrium for the machine at bus " + std::to_string(u.bus_id) +
                                 ": mechanical power exceeds the coupling");
        const double ds = std::asin(pm / a);
        e.delta_s(i) = ds;
        e.delta_u(i) = kPi - ds;
        const double vcr = -pm * (kPi - 2 * ds) + 2 * a * std::cos(ds);
        if (vcr < e.V_cr) e.V_cr = vcr, e.critical_machine = i;
        const double dcl = std::remainder(delta(i) - u.gamma - std::arg(vk), 2 * kPi);
        e.potential += -pm * (dcl - ds) - a * (std::cos(dcl) - std::cos(ds));
    }
    e.V_cl = e.kinetic + e.potential;
    e.V_margin = e.V_cr - e.V_cl;
    e.certified = e.V_margin > 0;
    return e;
}

CMat reduced_admittance(const NetworkState& net) {
    const auto& m = net.model;
    const int nI = m.n_ibus();
    if (net.vmap.offset.cwiseAbs().maxCoeff() > 0)
        throw ValidationError("reduced admittance requires a network without constant load currents");
    CMat Y = net.part.Y_II + net.part.Y_IK * net.vmap.Hc.topRows(m.NK);
    for (int i = 0; i < nI; ++i) Y.col(i) *= std::polar(1.0, -m.units[i].gamma);
    return Y;
}

double lossless_energy(const CMat& Y, const Vec& E, const Vec& M, const Vec& Pm, const Vec& delta, const Vec& omega) {
    const Eigen::Index n = E.size();
    double V = 0.5 * M.dot(omega.cwiseAbs2());
    for (Eigen::Index i = 0; i < n; ++i) {
        V -= (Pm(i) - Y(i, i).real() * E(i) * E(i)) * delta(i);
        for (Eigen::Index j = i + 1; j < n; ++j) V -= E(i) * E(j) * Y(i, j).imag() * std::cos(delta(i) - delta(j));
    }
    return V;
}

}  // namespace swing
