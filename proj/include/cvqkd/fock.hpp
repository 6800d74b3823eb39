#pragma once

// Truncated Fock-space engine: multi-mode kets, branch mixtures (weighted
// pure-state decompositions of a density operator), linear-optical unitaries,
// Kraus thermal-loss channels, heralded projections and covariance-matrix
// extraction. This is the backend for the quantum-scissor protocols and the
// cross-check oracle for every Gaussian closed form.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gaussian.hpp"

namespace cvqkd {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Dense complex amplitude tensor over (cutoff+1)^n_modes, row-major with the
// first mode slowest. Branches are allowed to be unnormalized.
struct FockKet {
    int n_modes = 0;
    int dim = 0;  // cutoff + 1
    CVec amp;

    FockKet() = default;
    FockKet(int modes, int cutoff)
        : n_modes(modes), dim(cutoff + 1), amp(CVec::Zero(ipow(cutoff + 1, modes))) {}

    static long ipow(long b, int e) {
        long r = 1;
        for (int i = 0; i < e; ++i) r *= b;
        return r;
    }
    long stride(int mode) const { return ipow(dim, n_modes - 1 - mode); }
    double norm2() const { return amp.squaredNorm(); }

    std::complex<double>& at(std::initializer_list<int> ns) {
        long idx = 0;
        for (int n : ns) idx = idx * dim + n;
        return amp[idx];
    }
};

struct Branch {
    double weight = 1.0;
    FockKet ket;
};
using BranchMixture = std::vector<Branch>;

inline double total_weight(const BranchMixture& mix) {
    double t = 0.0;
    for (const auto& b : mix) t += b.weight * b.ket.norm2();
    return t;
}

// Apply a single-mode operator (dim x dim matrix) to one mode of a ket.
inline FockKet apply_one_mode(const FockKet& k, const CMat& op, int mode) {
    FockKet out = k;
    out.amp.setZero();
    const long s = k.stride(mode);
    const long block = s * k.dim;
    const long total = k.amp.size();
    for (long base = 0; base < total; base += block) {
        for (long off = 0; off < s; ++off) {
            for (int i = 0; i < k.dim; ++i) {
                std::complex<double> acc{0.0, 0.0};
                for (int j = 0; j < k.dim; ++j) {
                    const auto v = k.amp[base + j * s + off];
                    if (v != std::complex<double>{0.0, 0.0}) acc += op(i, j) * v;
                }
                out.amp[base + i * s + off] = acc;
            }
        }
    }
    return out;
}

// Apply a two-mode operator (dim^2 x dim^2, ordered |i,j> with i on mode_i)
// to a pair of modes.
inline FockKet apply_two_mode(const FockKet& k, const CMat& op, int mode_i, int mode_j) {
    if (mode_i == mode_j) throw std::invalid_argument("apply_two_mode: equal modes");
    FockKet out = k;
    out.amp.setZero();
    const int d = k.dim;
    const long si = k.stride(mode_i), sj = k.stride(mode_j);
    const long total = k.amp.size();
    CVec v(d * d);
    // enumerate all joint indices with modes i and j at 0, then sweep the pair
    std::vector<long> bases;
    for (long idx = 0; idx < total; ++idx) {
        const int ni = static_cast<int>((idx / si) % d);
        const int nj = static_cast<int>((idx / sj) % d);
        if (ni == 0 && nj == 0) bases.push_back(idx);
    }
    for (long base : bases) {
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) v[a * d + b] = k.amp[base + a * si + b * sj];
        CVec w = op * v;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) out.amp[base + a * si + b * sj] = w[a * d + b];
    }
    return out;
}

inline CMat annihilation_op(int cutoff) {
    const int d = cutoff + 1;
    CMat a = CMat::Zero(d, d);
    for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline CMat number_op(int cutoff) {
    const int d = cutoff + 1;
    CMat n = CMat::Zero(d, d);
    for (int i = 0; i < d; ++i) n(i, i) = i;
    return n;
}

inline CMat phase_shift_op(int cutoff, double phi) {
    const int d = cutoff + 1;
    CMat u = CMat::Zero(d, d);
    for (int n = 0; n < d; ++n) u(n, n) = std::exp(std::complex<double>(0.0, phi * n));
    return u;
}

inline FockKet apply_phase_shift(const FockKet& k, int mode, double phi) {
    return apply_one_mode(k, phase_shift_op(k.dim - 1, phi), mode);
}

// Beamsplitter U = exp(theta (a_i^dag a_j - a_i a_j^dag)) with
// cos(theta) = sqrt(T); theta = pi/4 gives the 50:50 convention used at the
// relay. Built once per (cutoff, T) by exponentiating the generator.
inline CMat beamsplitter_op(int cutoff, double transmissivity) {
    if (transmissivity < 0.0 || transmissivity > 1.0)
        throw std::invalid_argument("beamsplitter_op: T out of [0,1]");
    const int d = cutoff + 1;
    const CMat a = annihilation_op(cutoff);
    const CMat id = CMat::Identity(d, d);
    CMat ai = CMat::Zero(d * d, d * d), aj = ai;
    // kron(a, I) acts on the first mode of the |i,j> pair
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            if (a(r, c) != std::complex<double>{0.0, 0.0})
                for (int k = 0; k < d; ++k) ai(r * d + k, c * d + k) = a(r, c);
        }
    for (int k = 0; k < d; ++k)
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c)
                if (a(r, c) != std::complex<double>{0.0, 0.0}) aj(k * d + r, k * d + c) = a(r, c);
    const double theta = std::acos(std::sqrt(transmissivity));
    CMat gen = theta * (ai.adjoint() * aj - ai * aj.adjoint());
    return gen.exp();
}

inline FockKet apply_beamsplitter(const FockKet& k, int mode_i, int mode_j, double transmissivity) {
    return apply_two_mode(k, beamsplitter_op(k.dim - 1, transmissivity), mode_i, mode_j);
}

inline FockKet tmsv_ket(double r, int cutoff, bool flip_sign_mode1 = false) {
    if (cutoff < 1) throw std::invalid_argument("tmsv_ket: cutoff < 1");
    FockKet k(2, cutoff);
    const double t = std::tanh(r), ch = std::cosh(r);
    for (int n = 0; n <= cutoff; ++n) {
        double a = std::pow(-t, n) / ch;
        if (flip_sign_mode1 && (n & 1)) a = -a;  // pi phase on mode 1
        k.at({n, n}) = a;
    }
    return k;
}

// sqrt(T)|1,0> + sqrt(1-T)|0,1>
inline FockKet single_photon_entangler(double transmissivity, int cutoff) {
    if (!(transmissivity > 0.0 && transmissivity < 1.0))
        throw std::invalid_argument("single_photon_entangler: T out of (0,1)");
    FockKet k(2, cutoff);
    k.at({1, 0}) = std::sqrt(transmissivity);
    k.at({0, 1}) = std::sqrt(1.0 - transmissivity);
    return k;
}

// Kraus decomposition of the lossy thermal channel: pure loss tau = eta/G
// followed by a quantum-limited amplifier of gain G = eta*eps/2 + 1,
//   A_l = sqrt((1-tau)^l / l!) tau^{n/2} a^l,
//   B_k = sqrt((1/k!)(1/G)((G-1)/G)^k) a^dag^k G^{-n/2}.
struct KrausChannel {
    double eta = 1.0, eps = 0.0, tau = 1.0, gain = 1.0;
    std::vector<CMat> ops;  // combined B_k A_l, negligible ones dropped
};

inline KrausChannel make_kraus_channel(double eta, double eps, int cutoff, int max_gain_index = 4) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("make_kraus_channel: eta");
    if (eps < 0.0) throw std::invalid_argument("make_kraus_channel: eps");
    KrausChannel ch;
    ch.eta = eta;
    ch.eps = eps;
    ch.gain = eta * eps / 2.0 + 1.0;
    ch.tau = eta / ch.gain;
    const int d = cutoff + 1;
    auto fact = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    std::vector<CMat> loss, amp;
    for (int l = 0; l < d; ++l) {
        CMat A = CMat::Zero(d, d);
        for (int n = l; n < d; ++n) {
            const double lad = std::sqrt(fact(n) / fact(n - l));
            A(n - l, n) = std::sqrt(std::pow(1.0 - ch.tau, l) / fact(l)) *
                          std::pow(ch.tau, (n - l) / 2.0) * lad;
        }
        if (A.cwiseAbs().maxCoeff() > 1e-14) loss.push_back(A);
    }
    for (int k = 0; k <= std::min(max_gain_index, cutoff); ++k) {
        CMat B = CMat::Zero(d, d);
        for (int n = 0; n + k < d; ++n) {
            const double lad = std::sqrt(fact(n + k) / fact(n));
            B(n + k, n) = std::sqrt(1.0 / fact(k) / ch.gain *
                                    std::pow((ch.gain - 1.0) / ch.gain, k)) *
                          std::pow(ch.gain, -n / 2.0) * lad;
        }
        if (B.cwiseAbs().maxCoeff() > 1e-16) amp.push_back(B);
    }
    for (const auto& A : loss)
        for (const auto& B : amp) {
            CMat M = B * A;
            if (M.cwiseAbs().maxCoeff() > 1e-12) ch.ops.push_back(std::move(M));
        }
    return ch;
}

// Fan each branch out over the channel's Kraus operators; branches whose
// weight falls below `prune` (relative to the input trace) are dropped and
// the discarded weight is returned through `pruned` when given.
inline BranchMixture apply_channel(const BranchMixture& mix, const KrausChannel& ch, int mode,
                                   double prune = 1e-12, double* pruned = nullptr) {
    BranchMixture out;
    double dropped = 0.0;
    const double scale = total_weight(mix);
    for (const auto& br : mix) {
        for (const auto& M : ch.ops) {
            FockKet nk = apply_one_mode(br.ket, M, mode);
            const double w = br.weight * nk.norm2();
            if (w > prune * scale)
                out.push_back({br.weight, std::move(nk)});
            else
                dropped += w;
        }
    }
    if (pruned) *pruned += dropped;
    return out;
}

// Project one mode onto a Fock outcome; removes the mode. The unnormalized
// weight of the result, relative to the input, is the herald probability.
inline FockKet project_mode(const FockKet& k, int mode, int outcome) {
    if (outcome >= k.dim) throw std::invalid_argument("project_mode: outcome above cutoff");
    FockKet out(k.n_modes - 1, k.dim - 1);
    const long s = k.stride(mode);
    const long block = s * k.dim;
    const long total = k.amp.size();
    long o = 0;
    for (long base = 0; base < total; base += block)
        for (long off = 0; off < s; ++off) out.amp[o++] = k.amp[base + outcome * s + off];
    return out;
}

inline BranchMixture project(const BranchMixture& mix, int mode, int outcome) {
    BranchMixture out;
    out.reserve(mix.size());
    for (const auto& br : mix) out.push_back({br.weight, project_mode(br.ket, mode, outcome)});
    return out;
}

// Dense density operator over the kept modes (intended for <= 2 kept modes).
inline CMat partial_trace(const BranchMixture& mix, const std::vector<int>& keep) {
    if (mix.empty()) throw std::invalid_argument("partial_trace: empty mixture");
    const int nm = mix.front().ket.n_modes;
    const int d = mix.front().ket.dim;
    long kd = 1;
    for (size_t i = 0; i < keep.size(); ++i) kd *= d;
    CMat rho = CMat::Zero(kd, kd);
    std::vector<int> traced;
    for (int m = 0; m < nm; ++m)
        if (std::find(keep.begin(), keep.end(), m) == keep.end()) traced.push_back(m);
    for (const auto& br : mix) {
        const auto& k = br.ket;
        const long total = k.amp.size();
        // map each flat index to (kept-part index, traced-part index)
        for (long i = 0; i < total; ++i) {
            if (k.amp[i] == std::complex<double>{0.0, 0.0}) continue;
            long ki = 0;
            for (int m : keep) ki = ki * d + static_cast<int>((i / k.stride(m)) % d);
            for (long j = 0; j < total; ++j) {
                if (k.amp[j] == std::complex<double>{0.0, 0.0}) continue;
                bool same = true;
                for (int m : traced)
                    if ((i / k.stride(m)) % d != (j / k.stride(m)) % d) {
                        same = false;
                        break;
                    }
                if (!same) continue;
                long kj = 0;
                for (int m : keep) kj = kj * d + static_cast<int>((j / k.stride(m)) % d);
                rho(ki, kj) += br.weight * k.amp[i] * std::conj(k.amp[j]);
            }
        }
    }
    return rho;
}

// 4x4 covariance matrix (xpxp) of a normalized 2-mode mixture from second
// moments of a and a^dag; protocol states are zero-mean by construction.
inline Mat extract_cm(const BranchMixture& mix) {
    if (mix.empty() || mix.front().ket.n_modes != 2)
        throw std::invalid_argument("extract_cm: need a 2-mode mixture");
    const int cutoff = mix.front().ket.dim - 1;
    const CMat a = annihilation_op(cutoff);
    const double tot = total_weight(mix);
    if (tot <= 0.0) throw std::domain_error("extract_cm: zero-trace mixture");
    double na = 0.0, nb = 0.0;
    std::complex<double> ab{0, 0}, abd{0, 0}, aa{0, 0}, bb{0, 0}, ma{0, 0}, mb{0, 0};
    for (const auto& br : mix) {
        const FockKet k0 = apply_one_mode(br.ket, a, 0);
        const FockKet k1 = apply_one_mode(br.ket, a, 1);
        const FockKet k01 = apply_one_mode(k0, a, 1);
        na += br.weight * k0.norm2();
        nb += br.weight * k1.norm2();
        ab += br.weight * br.ket.amp.dot(k01.amp);   // <a b>
        abd += br.weight * k1.amp.dot(k0.amp);       // <a b^dag>
        aa += br.weight * br.ket.amp.dot(apply_one_mode(k0, a, 0).amp);  // <a^2>
        bb += br.weight * br.ket.amp.dot(apply_one_mode(k1, a, 1).amp);  // <b^2>
        ma += br.weight * br.ket.amp.dot(k0.amp);
        mb += br.weight * br.ket.amp.dot(k1.amp);
    }
    na /= tot;
    nb /= tot;
    ab /= tot;
    abd /= tot;
    aa /= tot;
    bb /= tot;
    if (std::abs(ma) / tot > 1e-9 || std::abs(mb) / tot > 1e-9)
        throw std::domain_error("extract_cm: nonzero first moments");
    Mat cm = Mat::Zero(4, 4);
    cm(0, 0) = 2 * na + 1 + 2 * aa.real();
    cm(1, 1) = 2 * na + 1 - 2 * aa.real();
    cm(0, 1) = cm(1, 0) = 2 * aa.imag();
    cm(2, 2) = 2 * nb + 1 + 2 * bb.real();
    cm(3, 3) = 2 * nb + 1 - 2 * bb.real();
    cm(2, 3) = cm(3, 2) = 2 * bb.imag();
    cm(0, 2) = cm(2, 0) = 2 * (ab.real() + abd.real());
    cm(1, 3) = cm(3, 1) = -2 * ab.real() + 2 * abd.real();
    cm(0, 3) = cm(3, 0) = 2 * ab.imag() - 2 * abd.imag();
    cm(1, 2) = cm(2, 1) = 2 * ab.imag() + 2 * abd.imag();
    return cm;
}

}  // namespace cvqkd
