#pragma once

// Information-theoretic quantities: G entropy, mutual information from
// measured-outcome covariances, the Holevo bound against collective attacks
// (reverse reconciliation), secret key rate, and the PLOB repeaterless bound.

#include <cmath>
#include <stdexcept>

#include "gaussian.hpp"

namespace cvqkd {

// G(x) = (x+1) log2(x+1) - x log2 x, the von-Neumann entropy of a thermal
// state with mean photon number x.
inline double entropy_g(double x) {
    if (x < -1e-12) throw std::domain_error("entropy_g: negative argument");
    if (x <= 1e-12) return 0.0;
    return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

namespace detail {
// Covariance of the measured outcomes for one party: heterodyne adds vacuum
// and keeps both quadratures, homodyne keeps the x row only.
inline int outcome_rows(MeasurementKind k) { return k == MeasurementKind::Heterodyne ? 2 : 1; }
}  // namespace detail

// I_AB in bits from the joint outcome covariance,
//   I = 1/2 log2( det M_A det M_B / det M_joint ).
// The homodyne case is the Schur-complement (sigma -> infinity) limit of the
// literal det(Sigma + Lambda) expression.
inline double mutual_information(const Mat& cm, MeasurementKind kind_a, MeasurementKind kind_b) {
    Mat m = cm;
    if (kind_a == MeasurementKind::Heterodyne) m.block<2, 2>(0, 0) += Mat2::Identity();
    if (kind_b == MeasurementKind::Heterodyne) m.block<2, 2>(2, 2) += Mat2::Identity();
    const int ra = detail::outcome_rows(kind_a), rb = detail::outcome_rows(kind_b);
    Mat mj(ra + rb, ra + rb);
    int idx[4], k = 0;
    for (int i = 0; i < ra; ++i) idx[k++] = i;
    for (int i = 0; i < rb; ++i) idx[k++] = 2 + i;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) mj(i, j) = m(idx[i], idx[j]);
    const double det_a = mj.topLeftCorner(ra, ra).determinant();
    const double det_b = mj.bottomRightCorner(rb, rb).determinant();
    const double det_j = mj.determinant();
    if (det_j <= 0.0) throw std::domain_error("mutual_information: singular outcome covariance");
    const double v = 0.5 * std::log2(det_a * det_b / det_j);
    return v > 0.0 ? v : 0.0;
}

// chi_BE = G((g1-1)/2) + G((g2-1)/2) - G((g3-1)/2) with g1, g2 the symplectic
// eigenvalues of the shared CM and g3 from Bob-side conditioning.
inline double holevo_bound(const Mat& cm, MeasurementKind bob_kind) {
    const auto g = symplectic_eigenvalues(cm);
    const Mat cc = conditional_cm(cm, bob_kind);
    double det3 = cc.determinant();
    if (det3 < 1.0) det3 = 1.0;  // clamp rounding on near-pure conditionals
    const double g3 = std::sqrt(det3);
    double chi = entropy_g((g[0] - 1.0) / 2.0) + entropy_g((g[1] - 1.0) / 2.0) -
                 entropy_g((g3 - 1.0) / 2.0);
    if (chi < 0.0) {
        if (chi < -1e-9) throw std::domain_error("holevo_bound: significantly negative chi");
        chi = 0.0;
    }
    return chi;
}

// kappa = p_success * (beta * I_AB - chi_BE); raw value, may be negative.
inline double secret_key_rate(double i_ab, double chi_be, double beta, double p_success) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("secret_key_rate: beta out of [0,1]");
    if (p_success < 0.0 || p_success > 1.0 + 1e-9)
        throw std::invalid_argument("secret_key_rate: p_success out of [0,1]");
    return p_success * (beta * i_ab - chi_be);
}

inline double plob_bound(double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("plob_bound: eta out of (0,1)");
    return -std::log2(1.0 - eta);
}

inline double transmissivity_from_distance(double d_km, double loss_db_per_km = 0.2) {
    if (d_km < 0.0) throw std::invalid_argument("transmissivity_from_distance: negative distance");
    return std::pow(10.0, -loss_db_per_km * d_km / 10.0);
}

}  // namespace cvqkd
