#include "swing/analytic_engine.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace swing {

namespace {

constexpr double kMaxExponent = 700.0;

Mat null_columns(const Mat& A, double rel_tol) {
    Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    const double cut = rel_tol * std::max(smax, 1e-300);
    int rank = 0;
    while (rank < s.size() && s(rank) > cut) ++rank;
    return svd.matrixV().rightCols(A.cols() - rank);
}

}  // namespace

double Spectrum::max_real() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) m = std::max(m, b.re);
    return m;
}

Spectrum real_block_spectrum(const Mat& T, double snap_tol) {
    if (!T.allFinite()) throw NumericalError("system matrix has non-finite entries");
    Eigen::EigenSolver<Mat> es(T, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration failed to converge");
    const Eigen::VectorXcd ev = es.eigenvalues();

    Spectrum sp;
    std::vector<double> reals;
    std::vector<cplx> upper, lower;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const cplx l = ev(i);
        if (std::abs(l.imag()) <= snap_tol * std::max(1.0, std::abs(l))) reals.push_back(l.real());
        else if (l.imag() > 0) upper.push_back(l);
        else lower.push_back(l);
    }
    if (upper.size() != lower.size()) throw NumericalError("eigenvalues of a real matrix did not pair into conjugates");
    std::sort(reals.begin(), reals.end(), std::greater<>());
    std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() < b.imag();
    });

    const Eigen::Index n = T.rows();
    sp.D = Mat::Zero(n, n);
    int pos = 0;
    for (double r : reals) {
        sp.blocks.push_back({pos, 1, r, 0.0});
        sp.eigenvalues.emplace_back(r, 0.0);
        sp.D(pos, pos) = r;
        ++pos;
    }
    for (cplx p : upper) {
        sp.blocks.push_back({pos, 2, p.real(), p.imag()});
        sp.eigenvalues.push_back(p);
        sp.eigenvalues.push_back(std::conj(p));
        sp.D(pos, pos) = p.real();
        sp.D(pos, pos + 1) = -p.imag();
        sp.D(pos + 1, pos) = p.imag();
        sp.D(pos + 1, pos + 1) = p.real();
        pos += 2;
    }
    return sp;
}

double sylvester_residual(const Mat& T, const Mat& D, const Mat& psi) { return (psi * D - T * psi).norm(); }

BasisSet sylvester_basis(const Mat& T, const Spectrum& spec, double rank_tol, BasisMethod method) {
    const Eigen::Index n = T.rows();
    BasisSet bs;
    bs.rank_tol = rank_tol;
    if (method == BasisMethod::Kronecker) {
        const Eigen::Index nn = n * n;
        Mat K = Mat::Zero(nn, nn);
        // vec(T Psi) = (I (x) T) vec(Psi), vec(Psi D) = (D^T (x) I) vec(Psi)
        for (Eigen::Index j = 0; j < n; ++j) K.block(j * n, j * n, n, n) = T;
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index c = 0; c < n; ++c)
                if (spec.D(c, a) != 0.0) K.block(a * n, c * n, n, n).diagonal().array() -= spec.D(c, a);
        const Mat N = null_columns(K, rank_tol);
        for (Eigen::Index k = 0; k < N.cols(); ++k) {
            Mat psi = Eigen::Map<const Mat>(N.col(k).data(), n, n);
            int owner = -1;
            double best = 0.0;
            for (size_t b = 0; b < spec.blocks.size(); ++b) {
                const double m = psi.middleCols(spec.blocks[b].pos, spec.blocks[b].size).norm();
                if (m > best) best = m, owner = static_cast<int>(b);
            }
            bs.psi.push_back(std::move(psi));
            bs.block_of.push_back(owner);
        }
    } else {
        const Mat I = Mat::Identity(n, n);
        for (size_t b = 0; b < spec.blocks.size(); ++b) {
            const auto& blk = spec.blocks[b];
            Mat A;
            if (blk.size == 1) {
                A = T - blk.re * I;
            } else {
                A.resize(2 * n, 2 * n);
                A << T - blk.re * I, -blk.im * I, blk.im * I, T - blk.re * I;
            }
            const Mat N = null_columns(A, rank_tol);
            for (Eigen::Index k = 0; k < N.cols(); ++k) {
                Mat psi = Mat::Zero(n, n);
                for (int c = 0; c < blk.size; ++c) psi.col(blk.pos + c) = N.col(k).segment(c * n, n);
                psi /= psi.norm();
                bs.psi.push_back(std::move(psi));
                bs.block_of.push_back(static_cast<int>(b));
            }
        }
    }
    if (bs.psi.empty()) throw NumericalError("Sylvester null space is empty at the configured rank tolerance");
    return bs;
}

Vec modal_vector(const Spectrum& spec, double tau, bool* saturated) {
    Vec u(spec.D.rows());
    bool sat = false;
    for (const auto& b : spec.blocks) {
        double ex = b.re * tau;
        if (ex > kMaxExponent) {
            ex = kMaxExponent;
            sat = true;
        }
        const double e = std::exp(ex);
        if (b.size == 1) {
            u(b.pos) = e;
        } else {
            u(b.pos) = e * std::cos(b.im * tau);
            u(b.pos + 1) = e * std::sin(b.im * tau);
        }
    }
    if (saturated) *saturated = sat;
    return u;
}

Vec equilibrium_offset(const SwingSystem& sys, const Vec& z) {
    const int NI = sys.NI, ND = sys.ND;
    Vec off = Vec::Zero(sys.n());
    const Vec w0 = z.head(2 * NI);
    off.head(2 * NI) = w0 + Eigen::CompleteOrthogonalDecomposition<Mat>(sys.L).solve(-sys.l - sys.L * w0);
    if (ND) {
        const Vec wt0 = z.tail(2 * ND);
        off.tail(2 * ND) = wt0 + Eigen::CompleteOrthogonalDecomposition<Mat>(sys.Lt).solve(-sys.lt - sys.Lt * wt0);
    }
    return off;
}

AnalyticSolution fit_initial_conditions(const SwingSystem& sys, const Spectrum& spec, BasisSet basis, const Vec& z0,
                                        double t_origin, const VoltageMap& vmap) {
    const int n = sys.n();
    if (z0.size() != n) throw ValidationError("initial state has wrong dimension");
    AnalyticSolution sol;
    sol.NI = sys.NI;
    sol.ND = sys.ND;
    sol.spectrum = spec;
    sol.t_origin = t_origin;
    sol.vmap = vmap;
    sol.offset = equilibrium_offset(sys, z0);

    const Vec u0 = modal_vector(spec, 0.0);
    const int K = static_cast<int>(basis.psi.size());
    Mat Xi(n, K);
    for (int k = 0; k < K; ++k) Xi.col(k) = basis.psi[k] * u0;
    const Vec target = z0 - sol.offset;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(Xi);
    sol.beta = cod.solve(target);
    // more basis matrices than states is normal for repeated eigenvalues; only a
    // coefficient matrix that cannot span the state space is worth reporting
    sol.rank_deficient = cod.rank() < K;
    if (cod.rank() < n)
        sol.warnings.push_back("coefficient matrix is rank deficient (rank " + std::to_string(cod.rank()) + " of " +
                               std::to_string(K) + "); minimum-norm coefficients used");
    sol.target_norm = target.norm();
    sol.fit_residual = (Xi * sol.beta - target).norm();

    sol.G = Mat::Zero(n, n);
    for (int k = 0; k < K; ++k) sol.G += sol.beta(k) * basis.psi[k];
    sol.Theta = sol.G.topRows(2 * sys.NI);
    sol.basis = std::move(basis);
    return sol;
}

AnalyticSolution solve_analytic(const SwingSystem& sys, const Vec& z0, double t_origin, const VoltageMap& vmap,
                                const SolveOptions& opt) {
    Spectrum spec = real_block_spectrum(sys.T);
    BasisSet basis = sylvester_basis(sys.T, spec, opt.rank_tol, opt.basis);
    return fit_initial_conditions(sys, spec, std::move(basis), z0, t_origin, vmap);
}

Vec evaluate_z(const AnalyticSolution& sol, double t, bool* saturated) {
    return sol.offset + sol.G * modal_vector(sol.spectrum, t - sol.t_origin, saturated);
}

Vec evaluate_dz(const AnalyticSolution& sol, double t) {
    return sol.G * (sol.spectrum.D * modal_vector(sol.spectrum, t - sol.t_origin));
}

AnalyticState evaluate(const AnalyticSolution& sol, double t) {
    AnalyticState s;
    s.t = t;
    s.z = evaluate_z(sol, t, &s.divergent);
    const int NI = sol.NI, ND = sol.ND;
    CVec wall(NI + ND);
    for (int i = 0; i < NI; ++i) wall(i) = cplx(s.z(i), s.z(NI + i));
    for (int j = 0; j < ND; ++j) wall(NI + j) = cplx(s.z(4 * NI + j), s.z(4 * NI + ND + j));
    s.v_km = sol.vmap.bus_voltages(wall);
    return s;
}

std::vector<AnalyticState> evaluate_many(const AnalyticSolution& sol, const std::vector<double>& ts, Exec exec) {
    std::vector<AnalyticState> out(ts.size());
    const long n = static_cast<long>(ts.size());
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long k = 0; k < n; ++k) out[k] = evaluate(sol, ts[k]);
    return out;
}

Asymptote asymptote(const AnalyticSolution& sol) {
    const double m = sol.spectrum.max_real();
    if (m >= 0.0) throw NumericalError("no asymptote: max Re(lambda) = " + std::to_string(m) + " >= 0");
    Asymptote a;
    const int NI = sol.NI, ND = sol.ND;
    a.w_inf = sol.offset.head(2 * NI);
    a.w_tilde_inf = sol.offset.tail(2 * ND);
    CVec wall(NI + ND);
    for (int i = 0; i < NI; ++i) wall(i) = cplx(a.w_inf(i), a.w_inf(NI + i));
    for (int j = 0; j < ND; ++j) wall(NI + j) = cplx(a.w_tilde_inf(j), a.w_tilde_inf(ND + j));
    a.v_km_inf = sol.vmap.bus_voltages(wall);
    return a;
}

}  // namespace swing
