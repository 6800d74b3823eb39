#pragma once

// The five protocol pipelines: thermal-loss baseline, phase-noised channel,
// unitary averaging (Gaussian backend with the exact heralded CM), the
// quantum-scissor NLA relay and the hybrid UA-NLA relay (Fock backend).
// Monte-Carlo phase averaging uses counter-based randomness so results never
// depend on worker count or evaluation order.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fock.hpp"
#include "gaussian.hpp"
#include "keyrate.hpp"

namespace cvqkd {

enum class Variant { Baseline, PhaseNoise, UnitaryAveraging, NlaRelay, HybridUaNla };

struct ProtocolSpec {
    Variant variant = Variant::Baseline;
    double r = 0.5;
    double beta = 0.95;
    double epsilon = 0.02;
    double sigma = 0.0;
    int ua_copies = 1;            // 1 = off, else 2 or 4
    double scissor_T = -1.0;      // <= 0 means "auto"
    double relay_position = 0.5;  // Charlie's fraction of the total distance
    MeasurementKind alice_kind = MeasurementKind::Heterodyne;
    MeasurementKind bob_kind = MeasurementKind::Homodyne;
    int mc_samples = 400;
    std::uint64_t seed = 1;
    int cutoff = 6;
    double loss_db_per_km = 0.2;
    bool bob_arm_phase_noise = true;  // relay protocols: phase noise on Bob's arm too

    void validate() const {
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta out of [0,1]");
        if (epsilon < 0.0) throw std::invalid_argument("epsilon < 0");
        if (sigma < 0.0) throw std::invalid_argument("sigma < 0");
        if (r < 0.0) throw std::invalid_argument("r < 0");
        if (ua_copies != 1 && ua_copies != 2 && ua_copies != 4)
            throw std::invalid_argument("ua_copies must be 1, 2 or 4");
        if (scissor_T > 0.0 && scissor_T >= 1.0)
            throw std::invalid_argument("scissor_T must be in (0,1) or auto");
        if (!(relay_position > 0.0 && relay_position < 1.0))
            throw std::invalid_argument("relay_position out of (0,1)");
        if (mc_samples < 1) throw std::invalid_argument("mc_samples < 1");
        if (cutoff < 2) throw std::invalid_argument("cutoff < 2");
        const bool relay = variant == Variant::NlaRelay || variant == Variant::HybridUaNla;
        if (scissor_T > 0.0 && !relay)
            throw std::invalid_argument("scissor_T only meaningful for relay variants");
        if (variant == Variant::UnitaryAveraging && ua_copies == 1)
            throw std::invalid_argument("UnitaryAveraging requires ua_copies 2 or 4");
    }
};

struct ProtocolResult {
    Mat cm = Mat::Identity(4, 4);  // herald-weighted averaged covariance matrix
    double p_success = 1.0;        // product of all heralding probabilities
    double p_ua = 1.0;
    double p_qs = 1.0;
    double i_ab = 0.0;
    double chi_be = 0.0;
    double kappa = 0.0;
    double mc_stderr = 0.0;  // std error of the per-sample herald weight
    int skipped_samples = 0;
};

// --- counter-based randomness ------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// N(0, sigma^2) draw fully determined by (seed, sample_index, shifter_index).
inline double phase_sample(std::uint64_t seed, std::uint64_t sample, std::uint64_t shifter,
                           double sigma) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(sample * 0xd1342543de82ef95ULL + 1));
    h = splitmix64(h ^ splitmix64(shifter * 0xaf251af3b0f025b5ULL + 1));
    const std::uint64_t u1 = splitmix64(h);
    const std::uint64_t u2 = splitmix64(u1);
    // Box-Muller; u1 mapped into (0,1]
    const double x1 = (static_cast<double>(u1 >> 11) + 1.0) * 0x1.0p-53;
    const double x2 = static_cast<double>(u2 >> 11) * 0x1.0p-53;
    return sigma * std::sqrt(-2.0 * std::log(x1)) * std::cos(2.0 * M_PI * x2);
}

inline std::vector<double> sample_phases(const ProtocolSpec& s, std::uint64_t sample, int count,
                                         int shifter_base = 0) {
    std::vector<double> ph(count);
    for (int i = 0; i < count; ++i)
        ph[i] = phase_sample(s.seed, sample, static_cast<std::uint64_t>(shifter_base + i), s.sigma);
    return ph;
}

// --- Gaussian-backend pipelines ----------------------------------------------

namespace detail {

inline ProtocolResult finish(const ProtocolSpec& s, Mat cm, double p, double p_ua, double p_qs,
                             double stderr_w, int skipped) {
    ProtocolResult res;
    res.cm = std::move(cm);
    res.p_success = std::min(p, 1.0);
    res.p_ua = p_ua;
    res.p_qs = p_qs;
    res.i_ab = mutual_information(res.cm, s.alice_kind, s.bob_kind);
    res.chi_be = holevo_bound(res.cm, s.bob_kind);
    res.kappa = secret_key_rate(res.i_ab, res.chi_be, s.beta, res.p_success);
    res.mc_stderr = stderr_w;
    res.skipped_samples = skipped;
    return res;
}

}  // namespace detail

inline ProtocolResult run_baseline(const ProtocolSpec& s, double distance_km) {
    const double eta = transmissivity_from_distance(distance_km, s.loss_db_per_km);
    return detail::finish(s, thermal_loss_cm(tmsv_cm(s.r), eta, s.epsilon), 1.0, 1.0, 1.0, 0.0, 0);
}

inline ProtocolResult run_phase_noise(const ProtocolSpec& s, double distance_km) {
    if (s.sigma == 0.0) return run_baseline(s, distance_km);
    const double eta = transmissivity_from_distance(distance_km, s.loss_db_per_km);
    Mat acc = Mat::Zero(4, 4);
    for (int k = 0; k < s.mc_samples; ++k)
        acc += phase_noise_cm(s.r, eta, s.epsilon, phase_sample(s.seed, k, 0, s.sigma));
    return detail::finish(s, acc / s.mc_samples, 1.0, 1.0, 1.0, 0.0, 0);
}

inline ProtocolResult run_unitary_averaging(const ProtocolSpec& s, double distance_km) {
    const double eta = transmissivity_from_distance(distance_km, s.loss_db_per_km);
    if (s.sigma == 0.0) {
        // UA transparent: common-mode zero phases
        const std::vector<double> ph(s.ua_copies, 0.0);
        const double w = ua_weight(s.r, eta, s.epsilon, ph);
        return detail::finish(s, ua_exact_cm(s.r, eta, s.epsilon, ph), w, w, 1.0, 0.0, 0);
    }
    Mat acc = Mat::Zero(4, 4);
    double wsum = 0.0, wsq = 0.0;
    int skipped = 0;
    for (int k = 0; k < s.mc_samples; ++k) {
        const auto ph = sample_phases(s, k, s.ua_copies);
        double w;
        Mat cm;
        try {
            w = ua_weight(s.r, eta, s.epsilon, ph);
            cm = ua_exact_cm(s.r, eta, s.epsilon, ph);
        } catch (const std::domain_error&) {
            ++skipped;
            continue;
        }
        acc += w * cm;
        wsum += w;
        wsq += w * w;
    }
    const int n = s.mc_samples - skipped;
    if (n == 0) throw std::domain_error("run_unitary_averaging: all samples degenerate");
    const double p = wsum / n;
    const double var = wsq / n - p * p;
    return detail::finish(s, acc / wsum, p, p, 1.0, std::sqrt(std::max(var, 0.0) / n), skipped);
}

// --- Fock-backend relay pipelines --------------------------------------------

namespace detail {

// Alice's station for the relay: TMSV, optional UA encoding over `phis`
// arms, thermal-loss channel on the transmitted mode. Returns branches over
// (a1, o) and the UA herald weight accumulated so far.
//
// The n-arm UA encode/decode is folded exactly into two live modes: the arm
// phases enter only through Z = mean(e^{i phi_j}); the photon content of the
// error arms occupies a single combined mode (amplitude W = sqrt(1-|Z|^2))
// whose thermal channel plus vacuum herald reduces, branch by loss index l,
// to the factor (1-tau)^{l/2}/sqrt(G); each idle arm contributes 1/G.
struct SideState {
    BranchMixture branches;
    double herald = 1.0;
};

inline SideState relay_alice_side(double r, double eta, double eps, const std::vector<double>& phis,
                                  int cutoff, double prune) {
    const auto ch = make_kraus_channel(eta, eps, cutoff);
    SideState st;
    if (phis.size() <= 1) {
        FockKet ket = tmsv_ket(r, cutoff);
        if (phis.size() == 1) ket = apply_phase_shift(ket, 1, phis[0]);
        st.branches = apply_channel({{1.0, ket}}, ch, 1, prune);
        return st;
    }
    const int n_arms = static_cast<int>(phis.size());
    Cplx z{0.0, 0.0};
    for (double p : phis) z += std::exp(Cplx(0.0, p));
    z /= n_arms;
    const double w_err = std::sqrt(std::max(0.0, 1.0 - std::norm(z)));
    const double t = std::tanh(r), chr = std::cosh(r);
    const double G = ch.gain, tau = ch.tau;
    // 3-mode funneled ket (a1, o, E), then resolve the E herald analytically
    const int d = cutoff + 1;
    auto comb = [](int n, int k) {
        double c = 1.0;
        for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
        return c;
    };
    for (int l = 0; l < d; ++l) {
        FockKet ket(2, cutoff);
        bool nonzero = false;
        for (int n = l; n < d; ++n) {
            const Cplx amp = std::pow(-t, n) / chr * std::sqrt(comb(n, l)) *
                             std::pow(z, n - l) * std::pow(w_err, l) *
                             std::pow(1.0 - tau, l / 2.0) / std::sqrt(G);
            if (std::abs(amp) > 0.0) nonzero = true;
            ket.at({n, n - l}) = amp;
        }
        if (nonzero && ket.norm2() > prune) st.branches.push_back({1.0, std::move(ket)});
    }
    const double idle = std::pow(1.0 / G, n_arms - 2);
    for (auto& b : st.branches) b.weight *= idle;
    st.herald = total_weight(st.branches);  // channel on o is trace preserving
    st.branches = apply_channel(st.branches, ch, 1, prune);
    return st;
}

// Bob's station: single-photon entangler with the transmitted arm (o_b)
// first; optional UA encoding over `phis` arms folded the same way.
// Branches over (o_b, b2).
inline SideState relay_bob_side(double T, double eta, double eps, const std::vector<double>& phis,
                                int cutoff, double prune) {
    const auto ch = make_kraus_channel(eta, eps, cutoff);
    SideState st;
    if (phis.size() <= 1) {
        FockKet ket = single_photon_entangler(T, cutoff);
        if (phis.size() == 1) ket = apply_phase_shift(ket, 0, phis[0]);
        st.branches = apply_channel({{1.0, ket}}, ch, 0, prune);
        return st;
    }
    const int n_arms = static_cast<int>(phis.size());
    Cplx z{0.0, 0.0};
    for (double p : phis) z += std::exp(Cplx(0.0, p));
    z /= n_arms;
    const double w_err = std::sqrt(std::max(0.0, 1.0 - std::norm(z)));
    const double G = ch.gain, tau = ch.tau;
    // l = 0: sqrt(T) Z |1,0> + sqrt(1-T)|0,1>; l = 1: the error-arm photon
    FockKet k0(2, cutoff);
    k0.at({1, 0}) = std::sqrt(T) * z / std::sqrt(G);
    k0.at({0, 1}) = std::sqrt(1.0 - T) / std::sqrt(G);
    FockKet k1(2, cutoff);
    k1.at({0, 1}) = 0.0;
    k1.at({0, 0}) = std::sqrt(T) * w_err * std::sqrt(1.0 - tau) / std::sqrt(G);
    const double idle = std::pow(1.0 / G, n_arms - 2);
    st.branches.push_back({idle, std::move(k0)});
    if (k1.norm2() > prune) st.branches.push_back({idle, std::move(k1)});
    st.herald = total_weight(st.branches);
    st.branches = apply_channel(st.branches, ch, 0, prune);
    return st;
}

struct RelaySample {
    double weight = 0.0;  // P_UA * P_QS for this phase sample
    double p_ua = 1.0;
    Mat cm = Mat::Zero(4, 4);
};

inline RelaySample relay_sample(const ProtocolSpec& s, double distance_km,
                                const std::vector<double>& alice_phis,
                                const std::vector<double>& bob_phis) {
    const double dA = distance_km * s.relay_position;
    const double dB = distance_km * (1.0 - s.relay_position);
    const double etaA = transmissivity_from_distance(dA, s.loss_db_per_km);
    const double etaB = transmissivity_from_distance(dB, s.loss_db_per_km);
    double T = s.scissor_T;
    if (T <= 0.0) {
        // net unit gain: the teleamplifier gain cancels the first link's loss
        const double G = s.epsilon / 2.0;
        const double tauA = etaA / (etaA * G + 1.0), tauB = etaB / (etaB * G + 1.0);
        T = tauA / (tauA + tauB);
    }
    const double prune = 1e-13;
    SideState A = relay_alice_side(s.r, etaA, s.epsilon, alice_phis, s.cutoff, prune);
    SideState B = relay_bob_side(T, etaB, s.epsilon, bob_phis, s.cutoff, prune);
    const double totA = total_weight(A.branches), totB = total_weight(B.branches);
    // joint branches over (a1, o_a, o_b, b2)
    const int d = s.cutoff + 1;
    BranchMixture joint;
    const CMat bs = beamsplitter_op(s.cutoff, 0.5);
    for (const auto& ba : A.branches) {
        for (const auto& bb : B.branches) {
            const double w = ba.weight * bb.weight;
            if (w * ba.ket.norm2() * bb.ket.norm2() < prune * totA * totB) continue;
            FockKet k(4, s.cutoff);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const auto va = ba.ket.amp[i * d + j];
                    if (va == std::complex<double>{0.0, 0.0}) continue;
                    for (int u = 0; u < d; ++u)
                        for (int v = 0; v < d; ++v) {
                            const auto vb = bb.ket.amp[u * d + v];
                            if (vb != std::complex<double>{0.0, 0.0})
                                k.amp[((static_cast<long>(i) * d + j) * d + u) * d + v] = va * vb;
                        }
                }
            joint.push_back({w, apply_two_mode(k, bs, 1, 2)});
        }
    }
    // click pattern (o_a = 0, o_b = 1); the mirror pattern contributes the
    // factor 2 after its correctable pi phase
    joint = project(joint, 1, 0);
    joint = project(joint, 1, 1);
    RelaySample out;
    out.p_ua = A.herald * B.herald;
    out.weight = 2.0 * total_weight(joint);
    if (out.weight > 1e-15) out.cm = extract_cm(joint);
    return out;
}

}  // namespace detail

inline ProtocolResult run_nla_relay(const ProtocolSpec& s, double distance_km) {
    if (s.sigma == 0.0) {
        auto smp = detail::relay_sample(s, distance_km, {}, {});
        const double pqs = smp.weight / smp.p_ua;
        return detail::finish(s, smp.cm, smp.weight, smp.p_ua, pqs, 0.0, 0);
    }
    Mat acc = Mat::Zero(4, 4);
    double wsum = 0.0, wsq = 0.0, pua_sum = 0.0;
    int skipped = 0;
    for (int k = 0; k < s.mc_samples; ++k) {
        const auto pa = sample_phases(s, k, 1, 0);
        const auto pb = s.bob_arm_phase_noise ? sample_phases(s, k, 1, 8) : std::vector<double>{};
        auto smp = detail::relay_sample(s, distance_km, pa, pb);
        if (smp.weight <= 1e-15) {
            ++skipped;
            continue;
        }
        acc += smp.weight * smp.cm;
        wsum += smp.weight;
        wsq += smp.weight * smp.weight;
        pua_sum += smp.p_ua;
    }
    const int n = s.mc_samples - skipped;
    if (n == 0) throw std::domain_error("run_nla_relay: all samples degenerate");
    const double p = wsum / n;
    const double var = wsq / n - p * p;
    return detail::finish(s, acc / wsum, p, pua_sum / n, p / (pua_sum / n),
                          std::sqrt(std::max(var, 0.0) / n), skipped);
}

inline ProtocolResult run_hybrid_ua_nla(const ProtocolSpec& s, double distance_km) {
    const int n_arms = s.ua_copies >= 2 ? s.ua_copies : 2;
    if (s.sigma == 0.0) {
        const std::vector<double> z(n_arms, 0.0);
        auto smp = detail::relay_sample(s, distance_km, z, z);
        const double pqs = smp.weight / smp.p_ua;
        return detail::finish(s, smp.cm, smp.weight, smp.p_ua, pqs, 0.0, 0);
    }
    Mat acc = Mat::Zero(4, 4);
    double wsum = 0.0, wsq = 0.0, pua_sum = 0.0;
    int skipped = 0;
    for (int k = 0; k < s.mc_samples; ++k) {
        const auto pa = sample_phases(s, k, n_arms, 0);
        const auto pb =
            s.bob_arm_phase_noise ? sample_phases(s, k, n_arms, 8) : std::vector<double>{};
        auto smp = detail::relay_sample(s, distance_km, pa, pb);
        if (smp.weight <= 1e-15) {
            ++skipped;
            continue;
        }
        acc += smp.weight * smp.cm;
        wsum += smp.weight;
        wsq += smp.weight * smp.weight;
        pua_sum += smp.p_ua;
    }
    const int n = s.mc_samples - skipped;
    if (n == 0) throw std::domain_error("run_hybrid_ua_nla: all samples degenerate");
    const double p = wsum / n;
    const double var = wsq / n - p * p;
    return detail::finish(s, acc / wsum, p, pua_sum / n, p / (pua_sum / n),
                          std::sqrt(std::max(var, 0.0) / n), skipped);
}

inline ProtocolResult run_protocol(const ProtocolSpec& s, double distance_km) {
    s.validate();
    switch (s.variant) {
        case Variant::Baseline: return run_baseline(s, distance_km);
        case Variant::PhaseNoise: return run_phase_noise(s, distance_km);
        case Variant::UnitaryAveraging: return run_unitary_averaging(s, distance_km);
        case Variant::NlaRelay: return run_nla_relay(s, distance_km);
        case Variant::HybridUaNla: return run_hybrid_ua_nla(s, distance_km);
    }
    throw std::logic_error("run_protocol: unknown variant");
}

// Appendix-style low-noise expectations for the UA output: (<tanh r'>,
// <cos phi_beta>) to first order in the phase variance v.
inline std::pair<double, double> ua_low_noise_approx(double r, double v, int n) {
    if (v < 0.0 || n < 1) throw std::invalid_argument("ua_low_noise_approx: bad arguments");
    const double mean_tanh = (1.0 - (v / 2.0 - v / (2.0 * n))) * std::tanh(r);
    const double mean_cos = std::cos(std::sqrt(v / n));
    return {mean_tanh, mean_cos};
}

inline std::vector<double> default_r_grid() {
    std::vector<double> g(12);
    const double lo = 0.05, hi = 1.2;
    for (int i = 0; i < 12; ++i) g[i] = lo * std::pow(hi / lo, i / 11.0);
    return g;
}

// argmax of kappa over the grid; ties break to the smaller r.
inline std::pair<double, ProtocolResult> optimize_modulation(const ProtocolSpec& s,
                                                             double distance_km,
                                                             const std::vector<double>& r_grid) {
    if (r_grid.empty()) throw std::invalid_argument("optimize_modulation: empty grid");
    double best_r = r_grid.front();
    ProtocolResult best;
    bool first = true;
    for (double r : r_grid) {
        ProtocolSpec sp = s;
        sp.r = r;
        ProtocolResult res = run_protocol(sp, distance_km);
        if (first || res.kappa > best.kappa) {
            best = res;
            best_r = r;
            first = false;
        }
    }
    return {best_r, best};
}

}  // namespace cvqkd
