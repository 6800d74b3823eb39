#include <catch2/catch_amalgamated.hpp>

#include "cvqkd/gaussian.hpp"
#include "cvqkd/keyrate.hpp"

using namespace cvqkd;
using Catch::Approx;

TEST_CASE("entropy_g") {
    CHECK(entropy_g(0.0) == 0.0);
    CHECK(entropy_g(0.5) == Approx(1.37744375108173).epsilon(1e-12));
    CHECK(entropy_g(2.0) == Approx(2.75488750216347).epsilon(1e-12));
    // monotone increasing
    CHECK(entropy_g(1.0) > entropy_g(0.5));
    CHECK(entropy_g(3.0) > entropy_g(2.0));
    // large-x growth ~ log2(e*x)
    CHECK(entropy_g(1000.0) == Approx(std::log2(std::exp(1.0) * 1000.0)).epsilon(1e-3));
}

TEST_CASE("mutual_information") {
    const Mat w = thermal_loss_cm(tmsv_cm(0.5), 0.5, 0.02);
    CHECK(mutual_information(w, MeasurementKind::Heterodyne, MeasurementKind::Homodyne) ==
          Approx(0.171761786860185).epsilon(1e-11));
    CHECK(mutual_information(w, MeasurementKind::Heterodyne, MeasurementKind::Heterodyne) ==
          Approx(0.182812646663871).epsilon(1e-11));
    // uncorrelated state: zero information
    Mat prod = Mat::Identity(4, 4) * 1.3;
    CHECK(mutual_information(prod, MeasurementKind::Heterodyne, MeasurementKind::Heterodyne) ==
          Approx(0.0).margin(1e-12));
    // more squeezing, more information
    const Mat w2 = thermal_loss_cm(tmsv_cm(0.8), 0.5, 0.02);
    CHECK(mutual_information(w2, MeasurementKind::Heterodyne, MeasurementKind::Homodyne) >
          mutual_information(w, MeasurementKind::Heterodyne, MeasurementKind::Homodyne));
}

TEST_CASE("holevo_bound") {
    const Mat w = thermal_loss_cm(tmsv_cm(0.5), 0.5, 0.02);
    CHECK(holevo_bound(w, MeasurementKind::Homodyne) == Approx(0.0935544933144185).epsilon(1e-10));
    CHECK(holevo_bound(w, MeasurementKind::Heterodyne) == Approx(0.100652249808391).epsilon(1e-10));
    // pure lossless state leaks nothing
    CHECK(holevo_bound(tmsv_cm(0.6), MeasurementKind::Homodyne) == Approx(0.0).margin(1e-8));
    // more excess noise leaks more
    const Mat noisier = thermal_loss_cm(tmsv_cm(0.5), 0.5, 0.08);
    CHECK(holevo_bound(noisier, MeasurementKind::Homodyne) >
          holevo_bound(w, MeasurementKind::Homodyne));
}

TEST_CASE("secret_key_rate") {
    CHECK(secret_key_rate(0.2, 0.05, 0.95, 1.0) == Approx(0.95 * 0.2 - 0.05).epsilon(1e-13));
    CHECK(secret_key_rate(0.2, 0.05, 0.95, 0.25) == Approx(0.25 * (0.95 * 0.2 - 0.05)).epsilon(1e-13));
    // negative rates are reported, not clamped
    CHECK(secret_key_rate(0.01, 0.5, 0.95, 1.0) < 0.0);

    // frozen end-to-end pipeline value: d=50 km, r=0.5, eps=0.02, beta=0.95
    const double eta = transmissivity_from_distance(50.0);
    const Mat w = thermal_loss_cm(tmsv_cm(0.5), eta, 0.02);
    const double iab = mutual_information(w, MeasurementKind::Heterodyne, MeasurementKind::Homodyne);
    const double chi = holevo_bound(w, MeasurementKind::Homodyne);
    CHECK(iab == Approx(0.0380740687832853).epsilon(1e-10));
    CHECK(chi == Approx(0.0264621399398653).epsilon(1e-10));
    CHECK(secret_key_rate(iab, chi, 0.95, 1.0) == Approx(0.00970822540425572).epsilon(1e-9));
}

TEST_CASE("transmissivity_from_distance") {
    CHECK(transmissivity_from_distance(0.0) == Approx(1.0));
    CHECK(transmissivity_from_distance(50.0) == Approx(std::pow(10.0, -1.0)).epsilon(1e-13));
    CHECK(transmissivity_from_distance(100.0) == Approx(1e-2).epsilon(1e-13));
    CHECK(transmissivity_from_distance(100.0, 0.4) == Approx(1e-4).epsilon(1e-13));
    CHECK_THROWS_AS(transmissivity_from_distance(-1.0), std::invalid_argument);
}

TEST_CASE("plob_bound") {
    CHECK(plob_bound(transmissivity_from_distance(50.0)) == Approx(0.15200309344505).epsilon(1e-11));
    CHECK(plob_bound(transmissivity_from_distance(100.0)) == Approx(0.0144995696951151).epsilon(1e-11));
    CHECK(plob_bound(transmissivity_from_distance(300.0)) == Approx(1.44269576227845e-06).epsilon(1e-9));
    // small-eta asymptote: eta / ln 2
    const double eta = 1e-8;
    CHECK(plob_bound(eta) == Approx(eta / std::log(2.0)).epsilon(1e-6));
    CHECK_THROWS_AS(plob_bound(1.5), std::invalid_argument);
}
