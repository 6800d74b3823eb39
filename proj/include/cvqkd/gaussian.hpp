#pragma once

// Gaussian covariance-matrix toolkit for CV-QKD states.
//
// Conventions (fixed throughout the library): hbar = 2, vacuum variance 1,
// quadrature ordering (x1, p1, x2, p2, ...). All entropies downstream are in
// bits. Covariance matrices are plain Eigen matrices; physicality is checked
// where states are constructed, not on every access.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace cvqkd {

using Mat = Eigen::MatrixXd;
using Mat2 = Eigen::Matrix2d;
using Cplx = std::complex<double>;

enum class MeasurementKind { Homodyne, Heterodyne };

inline Mat symplectic_form(int n_modes) {
    Mat omega = Mat::Zero(2 * n_modes, 2 * n_modes);
    for (int m = 0; m < n_modes; ++m) {
        omega(2 * m, 2 * m + 1) = 1.0;
        omega(2 * m + 1, 2 * m) = -1.0;
    }
    return omega;
}

// |eigenvalues of Omega*V|, deduplicated (each appears twice), descending.
inline std::vector<double> symplectic_eigenvalues(const Mat& cm) {
    const int n = static_cast<int>(cm.rows()) / 2;
    Eigen::EigenSolver<Mat> es(symplectic_form(n) * cm, false);
    std::vector<double> mods(2 * n);
    for (int i = 0; i < 2 * n; ++i) mods[i] = std::abs(es.eigenvalues()[i]);
    std::sort(mods.begin(), mods.end(), std::greater<double>());
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = mods[2 * i];
    for (double v : out)
        if (v < 1.0 - 1e-9)
            throw std::domain_error("symplectic_eigenvalues: unphysical covariance matrix");
    return out;
}

inline bool is_physical(const Mat& cm, double tol = 1e-9) {
    if (!cm.isApprox(cm.transpose(), 1e-12)) return false;
    const int n = static_cast<int>(cm.rows()) / 2;
    Eigen::EigenSolver<Mat> es(symplectic_form(n) * cm, false);
    for (int i = 0; i < cm.rows(); ++i)
        if (std::abs(es.eigenvalues()[i]) < 1.0 - tol) return false;
    Eigen::SelfAdjointEigenSolver<Mat> sa(cm);
    return sa.eigenvalues().minCoeff() > 0.0;
}

inline Mat tmsv_cm(double r) {
    if (!std::isfinite(r) || r < 0.0) throw std::invalid_argument("tmsv_cm: bad r");
    const double a = std::cosh(2 * r), c = std::sinh(2 * r);
    Mat cm = Mat::Identity(4, 4) * a;
    cm(0, 2) = cm(2, 0) = c;
    cm(1, 3) = cm(3, 1) = -c;
    return cm;
}

// Thermal-loss channel on mode 2 of a 2-mode CM: Bob block -> eta*(B + kappa) I2
// with kappa = (1-eta)/eta + eps; correlations scale by sqrt(eta).
inline Mat thermal_loss_cm(const Mat& cm, double eta, double eps) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("thermal_loss_cm: eta out of (0,1]");
    if (eps < 0.0) throw std::invalid_argument("thermal_loss_cm: eps < 0");
    Mat out = cm;
    const double kappa = (1.0 - eta) / eta + eps;
    out.block<2, 2>(0, 2) *= std::sqrt(eta);
    out.block<2, 2>(2, 0) *= std::sqrt(eta);
    out.block<2, 2>(2, 2) = eta * (cm(2, 2) + kappa) * Mat2::Identity();
    return out;
}

// CM after a phase shift phi on the transmitted arm followed by thermal loss:
// A = cosh 2r, C = sqrt(eta) sinh 2r cos(phi), B = eta(cosh 2r + (1-eta)/eta + eps).
inline Mat phase_noise_cm(double r, double eta, double eps, double phi) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("phase_noise_cm: eta out of (0,1]");
    if (eps < 0.0) throw std::invalid_argument("phase_noise_cm: eps < 0");
    const double a = std::cosh(2 * r);
    const double c = std::sqrt(eta) * std::sinh(2 * r) * std::cos(phi);
    const double b = eta * (a + (1.0 - eta) / eta + eps);
    Mat cm = Mat::Zero(4, 4);
    cm.block<2, 2>(0, 0) = a * Mat2::Identity();
    cm.block<2, 2>(2, 2) = b * Mat2::Identity();
    cm(0, 2) = cm(2, 0) = c;
    cm(1, 3) = cm(3, 1) = -c;
    return cm;
}

inline Cplx ua_resultant(const std::vector<double>& phis) {
    Cplx z{0.0, 0.0};
    for (double p : phis) z += std::exp(Cplx(0.0, p));
    return z / static_cast<double>(phis.size());
}

// Low-noise closed form for the unitary-averaged CM: the averaged-arm blocks
// with A_UA = cosh(2r)|Z|. Kept as the published approximation; the exact
// heralded CM below is what the protocol pipelines use.
inline Mat ua_cm_closed_form(double r, double eta, double eps, const std::vector<double>& phis) {
    const Cplx z = ua_resultant(phis);
    const double az = std::abs(z);
    if (az < 1e-12)
        throw std::domain_error("ua_cm_closed_form: degenerate heralding, |Z| = 0");
    const double a = std::cosh(2 * r) * az;
    const double b = eta * (a + (1.0 - eta) / eta + eps);
    const double c = std::sqrt(eta) * std::sinh(2 * r) * az *
                     std::cos(std::atan2(z.imag(), z.real()));
    Mat cm = Mat::Zero(4, 4);
    cm.block<2, 2>(0, 0) = a * Mat2::Identity();
    cm.block<2, 2>(2, 2) = b * Mat2::Identity();
    cm(0, 2) = cm(2, 0) = c;
    cm(1, 3) = cm(3, 1) = -c;
    return cm;
}

// Exact covariance matrix of the vacuum-heralded unitary-averaged state after
// the thermal-loss channel. Derivation sketch: the heralded state is a
// two-mode squeezed vacuum with effective tanh r' = |Z| tanh r on the kept
// arm plus an incoherent loss-branch ladder from the error arm; summing the
// ladder geometrically gives, with t = tanh r, G = eta*eps/2 + 1, tau = eta/G,
//   s = |Z|^2 + (1-|Z|^2)(1-tau),  x = t^2 s,
//   A = (1+x)/(1-x),
//   B = eta * (1 + 2|Z|^2 t^2/(1-x) + (1-eta)/eta + eps),
//   m = sqrt(eta) t Z / (1-x),  C = 2 [[Re m, -Im m], [-Im m, -Re m]].
// Limits: Z=1 reproduces thermal_loss_cm(tmsv_cm(r)); eta=1, eps=0 reproduces
// the heralded squeezer S(r' e^{i phi_beta}). Cross-validated against the
// Fock backend in the test suite.
inline Mat ua_exact_cm(double r, double eta, double eps, const std::vector<double>& phis) {
    const Cplx z = ua_resultant(phis);
    const double az2 = std::norm(z);
    if (az2 < 1e-24)
        throw std::domain_error("ua_exact_cm: degenerate heralding, |Z| = 0");
    const double t = std::tanh(r);
    const double G = eta * eps / 2.0 + 1.0;
    const double tau = eta / G;
    const double s = az2 + (1.0 - az2) * (1.0 - tau);
    const double x = t * t * s;
    const double A = (1.0 + x) / (1.0 - x);
    const double B = eta * (1.0 + 2.0 * az2 * t * t / (1.0 - x) + (1.0 - eta) / eta + eps);
    const Cplx m = std::sqrt(eta) * t * z / (1.0 - x);
    Mat cm = Mat::Zero(4, 4);
    cm.block<2, 2>(0, 0) = A * Mat2::Identity();
    cm.block<2, 2>(2, 2) = B * Mat2::Identity();
    Mat2 C;
    C << m.real(), -m.imag(), -m.imag(), -m.real();
    C *= 2.0;
    cm.block<2, 2>(0, 2) = C;
    cm.block<2, 2>(2, 0) = C.transpose();
    return cm;
}

// Exact vacuum-heralding weight of the n-copy UA decoder. Equal to 1 when
// eps = 0 (and in particular r-independent for common-mode phases); each idle
// arm contributes a factor 1/G, the error arm contributes the geometric sum.
inline double ua_weight(double r, double eta, double eps, const std::vector<double>& phis) {
    const int n = static_cast<int>(phis.size());
    const Cplx z = ua_resultant(phis);
    const double az2 = std::norm(z);
    const double t = std::tanh(r);
    const double G = eta * eps / 2.0 + 1.0;
    const double tau = eta / G;
    const double s = az2 + (1.0 - az2) * (1.0 - tau);
    const double x = t * t * s;
    const double ch = std::cosh(r);
    return std::pow(1.0 / G, n - 1) / (ch * ch * (1.0 - x));
}

// Condition a 2-mode CM on measuring mode 2. Homodyne uses the x quadrature
// via the Moore-Penrose pseudo-inverse of the projected Bob block (the stable
// sigma -> infinity limit).
inline Mat conditional_cm(const Mat& cm, MeasurementKind kind) {
    const Mat2 sa = cm.block<2, 2>(0, 0);
    const Mat2 sb = cm.block<2, 2>(2, 2);
    const Mat2 sc = cm.block<2, 2>(0, 2);
    if (kind == MeasurementKind::Heterodyne) {
        return sa - sc * (sb + Mat2::Identity()).inverse() * sc.transpose();
    }
    Mat2 proj = Mat2::Zero();
    proj(0, 0) = 1.0;
    const Mat2 pbp = proj * sb * proj;
    // pseudo-inverse of the rank-1 projected block
    Mat2 pinv = Mat2::Zero();
    if (pbp(0, 0) > 1e-300) pinv(0, 0) = 1.0 / pbp(0, 0);
    return sa - sc * pinv * sc.transpose();
}

}  // namespace cvqkd
