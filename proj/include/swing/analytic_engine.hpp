#pragma once

#include <string>
#include <vector>

#include "swing/cartesian_swing.hpp"

namespace swing {

// One diagonal block of D_lambda: a real eigenvalue (size 1) or a conjugate
// pair re +- i im (size 2, block [re -im; im re]).
struct SpectralBlock {
    int pos = 0;
    int size = 1;
    double re = 0.0, im = 0.0;
};

struct Spectrum {
    std::vector<cplx> eigenvalues;  // every eigenvalue of T, conjugates included
    std::vector<SpectralBlock> blocks;  // reals first (descending), then pairs
    Mat D;                          // real block-diagonal D_lambda
    double max_real() const;
};

// Imaginary parts below snap_tol * max(1, |lambda|) are treated as real.
Spectrum real_block_spectrum(const Mat& T, double snap_tol = 1e-9);

enum class BasisMethod { Kronecker, Structured };

struct BasisSet {
    std::vector<Mat> psi;  // each N x N, Psi D - T Psi = 0
    std::vector<int> block_of;  // owning spectral block per basis matrix
    double rank_tol = 1e-10;
};

// Null space of (I (x) T - D^T (x) I).  Singular values below rank_tol * sigma_max
// count as zero.  Structured exploits the block-diagonal D (same space, cheaper).
BasisSet sylvester_basis(const Mat& T, const Spectrum& spec, double rank_tol = 1e-10,
                         BasisMethod method = BasisMethod::Structured);

double sylvester_residual(const Mat& T, const Mat& D, const Mat& psi);

struct AnalyticSolution {
    int NI = 0, ND = 0;
    Spectrum spectrum;
    BasisSet basis;
    Vec beta;
    Mat G;       // sum_l beta_l Psi_l, N x N
    Mat Theta;   // first 2NI rows of G
    Vec offset;  // equilibrium [w*; 0; w_tilde*]
    double t_origin = 0.0;
    double fit_residual = 0.0, target_norm = 0.0;
    bool rank_deficient = false;
    std::vector<std::string> warnings;
    VoltageMap vmap;

    int n() const { return static_cast<int>(G.rows()); }
};

// Equilibrium of z' = T z + b nearest (least squares) to the given anchor state.
Vec equilibrium_offset(const SwingSystem& sys, const Vec& z_anchor);

AnalyticSolution fit_initial_conditions(const SwingSystem& sys, const Spectrum& spec, BasisSet basis, const Vec& z0,
                                        double t_origin, const VoltageMap& vmap);

struct SolveOptions {
    double rank_tol = 1e-10;
    BasisMethod basis = BasisMethod::Structured;
};

// spectrum -> basis -> fit
AnalyticSolution solve_analytic(const SwingSystem& sys, const Vec& z0, double t_origin, const VoltageMap& vmap,
                                const SolveOptions& opt = {});

struct AnalyticState {
    double t = 0.0;
    Vec z;          // [w; dw/dt; w_tilde]
    CVec v_km;      // Kbus then Mbus voltages
    bool divergent = false;  // exponent saturated
};

Vec modal_vector(const Spectrum& spec, double tau, bool* saturated = nullptr);
Vec evaluate_z(const AnalyticSolution& sol, double t, bool* saturated = nullptr);
Vec evaluate_dz(const AnalyticSolution& sol, double t);
AnalyticState evaluate(const AnalyticSolution& sol, double t);
std::vector<AnalyticState> evaluate_many(const AnalyticSolution& sol, const std::vector<double>& ts,
                                         Exec exec = Exec::Parallel);

struct Asymptote {
    Vec w_inf, w_tilde_inf;
    CVec v_km_inf;
};
// Throws NumericalError when any Re(lambda) >= 0.
Asymptote asymptote(const AnalyticSolution& sol);

}  // namespace swing
