#include <catch2/catch_amalgamated.hpp>

#include "cvqkd/fock.hpp"

using namespace cvqkd;
using Catch::Approx;

namespace {

FockKet tensor2(const FockKet& a, const FockKet& b) {
    FockKet k(4, a.dim - 1);
    const int d = a.dim;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const auto va = a.amp[i * d + j];
            if (va == std::complex<double>{0.0, 0.0}) continue;
            for (int u = 0; u < d; ++u)
                for (int v = 0; v < d; ++v)
                    k.amp[((static_cast<long>(i) * d + j) * d + u) * d + v] =
                        va * b.amp[u * d + v];
        }
    return k;
}

}  // namespace

TEST_CASE("tmsv_ket") {
    const FockKet k = tmsv_ket(0.3, 14);
    CHECK(k.norm2() == Approx(1.0).margin(1e-12));
    const double t = std::tanh(0.3), ch = std::cosh(0.3);
    CHECK(std::abs(k.amp[0] - std::complex<double>(1.0 / ch, 0)) < 1e-14);
    FockKet k2 = tmsv_ket(0.3, 14);
    CHECK(k2.at({1, 1}).real() == Approx(-t / ch).epsilon(1e-13));
    CHECK(k2.at({2, 2}).real() == Approx(t * t / ch).epsilon(1e-13));
    CHECK(k2.at({1, 0}) == std::complex<double>{0.0, 0.0});

    FockKet f = tmsv_ket(0.3, 14, true);
    CHECK(f.at({1, 1}).real() == Approx(t / ch).epsilon(1e-13));
    CHECK(f.at({2, 2}).real() == Approx(t * t / ch).epsilon(1e-13));
}

TEST_CASE("beamsplitter convention") {
    const int cutoff = 4;
    const CMat bs = beamsplitter_op(cutoff, 0.5);
    CHECK((bs.adjoint() * bs - CMat::Identity(25, 25)).cwiseAbs().maxCoeff() < 1e-12);

    FockKet one(2, cutoff);
    one.at({1, 0}) = 1.0;
    const FockKet split = apply_two_mode(one, bs, 0, 1);
    FockKet s2 = split;
    CHECK(s2.at({1, 0}).real() == Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(s2.at({0, 1}).real() == Approx(-std::sqrt(0.5)).epsilon(1e-12));

    // two-photon interference: |1,1> never exits as |1,1> on a 50:50 splitter
    FockKet hom(2, cutoff);
    hom.at({1, 1}) = 1.0;
    FockKet dip = apply_two_mode(hom, bs, 0, 1);
    CHECK(std::abs(dip.at({1, 1})) < 1e-13);
    CHECK(std::abs(dip.at({2, 0})) == Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(std::abs(dip.at({0, 2})) == Approx(std::sqrt(0.5)).epsilon(1e-12));

    // T = 1 is the identity
    FockKet idk = apply_beamsplitter(one, 0, 1, 1.0);
    CHECK(std::abs(idk.at({1, 0}) - std::complex<double>{1.0, 0.0}) < 1e-12);
}

TEST_CASE("phase shift") {
    FockKet k(1, 5);
    k.at({2}) = 1.0;
    FockKet shifted = apply_phase_shift(k, 0, 0.4);
    CHECK(shifted.at({2}).real() == Approx(std::cos(0.8)).epsilon(1e-13));
    CHECK(shifted.at({2}).imag() == Approx(std::sin(0.8)).epsilon(1e-13));
}

TEST_CASE("kraus channel") {
    const int cutoff = 10;
    SECTION("completeness on low-lying levels") {
        const auto ch = make_kraus_channel(0.6, 0.05, cutoff);
        const int d = cutoff + 1;
        CMat sum = CMat::Zero(d, d);
        for (const auto& M : ch.ops) sum += M.adjoint() * M;
        for (int n = 0; n <= cutoff - 5; ++n) CHECK(sum(n, n).real() == Approx(1.0).margin(1e-8));
    }
    SECTION("pure loss on a single photon") {
        const auto ch = make_kraus_channel(0.35, 0.0, cutoff);
        FockKet one(1, cutoff);
        one.at({1}) = 1.0;
        auto mix = apply_channel({{1.0, one}}, ch, 0, 0.0);
        CHECK(total_weight(mix) == Approx(1.0).margin(1e-12));
        const CMat n = number_op(cutoff);
        double en = 0.0;
        for (const auto& br : mix) en += br.weight * br.ket.amp.dot(apply_one_mode(br.ket, n, 0).amp).real();
        CHECK(en == Approx(0.35).margin(1e-12));
    }
    SECTION("vacuum picks up the channel's thermal photons") {
        const auto ch = make_kraus_channel(0.7, 0.05, 6);
        FockKet vac(1, 6);
        vac.at({0}) = 1.0;
        auto mix = apply_channel({{1.0, vac}}, ch, 0, 0.0);
        CHECK(total_weight(mix) == Approx(1.0).margin(1e-9));
        const CMat n = number_op(6);
        double en = 0.0;
        for (const auto& br : mix) en += br.weight * br.ket.amp.dot(apply_one_mode(br.ket, n, 0).amp).real();
        CHECK(en == Approx(0.0174999924753).epsilon(1e-7));  // ~ eta*eps/2
        CHECK(en == Approx(0.7 * 0.05 / 2).margin(1e-6));
    }
}

TEST_CASE("extract_cm agrees with the closed forms") {
    const double r = 0.4;
    SECTION("pure two-mode squeezed state") {
        const FockKet k = tmsv_ket(r, 20, true);
        const Mat cm = extract_cm({{1.0, k}});
        CHECK(cm.isApprox(tmsv_cm(r), 1e-8));
    }
    SECTION("thermal-loss channel") {
        const auto ch = make_kraus_channel(0.6, 0.05, 12);
        auto mix = apply_channel({{1.0, tmsv_ket(r, 12, true)}}, ch, 1, 1e-14);
        const Mat cm = extract_cm(mix);
        CHECK(cm.isApprox(thermal_loss_cm(tmsv_cm(r), 0.6, 0.05), 2e-3));
    }
    SECTION("phase rotation before the channel") {
        const auto ch = make_kraus_channel(0.6, 0.02, 12);
        FockKet k = apply_phase_shift(tmsv_ket(r, 12, true), 1, 0.3);
        auto mix = apply_channel({{1.0, k}}, ch, 1, 1e-14);
        const Mat cm = extract_cm(mix);
        CHECK(cm(0, 2) == Approx(phase_noise_cm(r, 0.6, 0.02, 0.3)(0, 2)).epsilon(2e-3));
        CHECK(cm(0, 3) != Approx(0.0).margin(1e-3));  // rotation mixes quadratures
    }
}

TEST_CASE("partial_trace") {
    const FockKet k = tmsv_ket(0.5, 12);
    const CMat rho = partial_trace({{1.0, k}}, {0});
    CHECK(rho.trace().real() == Approx(1.0).margin(1e-10));
    // reduced state of a TMSV is thermal with nbar = sinh^2 r
    const double nb = std::sinh(0.5) * std::sinh(0.5);
    CHECK(rho(0, 0).real() == Approx(1.0 / (nb + 1.0)).epsilon(1e-8));
    CHECK(rho(1, 1).real() == Approx(nb / std::pow(nb + 1.0, 2)).epsilon(1e-8));
    CHECK(rho.cwiseAbs().maxCoeff() == Approx(rho(0, 0).real()).epsilon(1e-10));
}

TEST_CASE("lossless scissor heralding") {
    // signal arm of a TMSV through a single-photon teleamplifier:
    // project (0,1) at a balanced splitter, output alpha|00> + beta|11>
    const int cutoff = 5;
    const double r = 0.3, T = 0.3;
    FockKet joint = tensor2(tmsv_ket(r, cutoff), single_photon_entangler(T, cutoff));
    joint = apply_beamsplitter(joint, 1, 2, 0.5);
    FockKet h = project_mode(joint, 1, 0);
    h = project_mode(h, 1, 1);
    const double p = 2.0 * h.norm2();
    CHECK(p == Approx(0.328904000595738).epsilon(1e-11));
    FockKet hh = h;
    const double nrm = std::sqrt(h.norm2());
    CHECK(std::abs(hh.at({0, 0})) / nrm == Approx(0.913627361944707).epsilon(1e-11));
    CHECK(std::abs(hh.at({1, 1})) / nrm == Approx(0.406552633131252).epsilon(1e-11));
    // gain: amplitude ratio is tanh(r) * sqrt((1-T)/T)
    CHECK(std::abs(hh.at({1, 1}) / hh.at({0, 0})) ==
          Approx(std::tanh(r) * std::sqrt((1 - T) / T)).epsilon(1e-11));
    // everything else is cut off
    CHECK(std::abs(hh.at({1, 0})) < 1e-14);
    CHECK(std::abs(hh.at({2, 2})) < 1e-14);
}
