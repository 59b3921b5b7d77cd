#include <algorithm>
#include <cmath>
#include <numeric>

#include <doctest.h>

#include "fpcav/transfer_matrix.hpp"
#include "gen.hpp"

using namespace fpcav;

namespace {

CavityConfig random_cavity(testgen::Rng& r, bool lossless) {
    CavityConfig c;
    CoatingDesign d;
    d.layer_count = 2 * r.integer(2, 12) + 1;
    d.n_low = r.uniform(1.38, 1.6);
    d.design_wavelength = r.uniform(600e-9, 680e-9);
    if (!lossless) d.absorption = r.log_uniform(1e-7, 1e-4);
    c.flat_mirror = d.build();
    d.layer_count = 2 * r.integer(2, 12) + 1;
    c.fiber_mirror = d.build();
    c.length = r.uniform(12e-6, 32e-6);
    c.membrane_thickness = r.coin() ? 0.0 : r.uniform(0.5e-6, 0.9 * c.length);
    c.membrane = OpticalMedium(Complex(r.uniform(1.0, 3.0), lossless ? 0.0 : r.log_uniform(1e-8, 1e-4)));
    c.fiber_roc = c.length + r.uniform(5e-6, 80e-6);
    c.guoy_enabled = r.coin();
    if (!lossless) {
        c.sigma_air_diamond = r.uniform(0.0, 5e-9);
        c.sigma_diamond_mirror = r.uniform(0.0, 5e-9);
    }
    return c;
}

}  // namespace

TEST_CASE("lossless propagation and interfaces are consistent") {
    testgen::for_all(100, 10, [](testgen::Rng& r) {
        const OpticalMedium a(r.uniform(1.0, 3.0)), b(r.uniform(1.0, 3.0));
        const double lambda = r.uniform(400e-9, 900e-9);
        const auto P = propagation_matrix(a, r.uniform(0, 20e-6), lambda, r.uniform(-1, 1));
        CHECK(std::abs(P.det() - 1.0) < 1e-13);
        CHECK(std::abs(std::abs(P.m11) - 1.0) < 1e-13);
        // Crossing an interface and coming back is the identity.
        const auto there = interface_matrix(fresnel_coefficients(a, b), fresnel_coefficients(b, a));
        const auto back = interface_matrix(fresnel_coefficients(b, a), fresnel_coefficients(a, b));
        const auto I = back * there;
        CHECK(std::abs(I.m11 - 1.0) < 1e-13);
        CHECK(std::abs(I.m12) < 1e-13);
        CHECK(std::abs(I.m21) < 1e-13);
        CHECK(std::abs(I.m22 - 1.0) < 1e-13);
    });
    CHECK_THROWS_AS(propagation_matrix(kAir, -1e-9, 637e-9), InvalidConfigError);
}

TEST_CASE("single interface reproduces the Fresnel amplitudes") {
    const OpticalMedium glass(1.5);
    const auto m = interface_matrix(fresnel_coefficients(kAir, glass), fresnel_coefficients(glass, kAir));
    const auto amp = left_incidence(m);
    CHECK(std::abs(amp.r - Complex(-0.2, 0.0)) < 1e-15);
    CHECK(std::abs(amp.t - Complex(0.8, 0.0)) < 1e-15);
}

TEST_CASE("reversed lossless stack is the mirror image of the inverse") {
    testgen::for_all(50, 11, [](testgen::Rng& r) {
        const auto s = testgen::random_stack(r, true);
        const double lambda = r.uniform(500e-9, 800e-9);
        const auto fwd = stack_matrix(s, kAir, lambda, StackDirection::SubstrateToAmbient);
        const auto rev = stack_matrix(s, kAir, lambda, StackDirection::AmbientToSubstrate);
        const auto inv = fwd.inverse();
        const double scale = inv.max_abs();
        // Walking the stack backwards exchanges the roles of the two travelling waves.
        CHECK(std::abs(rev.m11 - inv.m22) < 1e-10 * scale);
        CHECK(std::abs(rev.m12 - inv.m21) < 1e-10 * scale);
        CHECK(std::abs(rev.m21 - inv.m12) < 1e-10 * scale);
        CHECK(std::abs(rev.m22 - inv.m11) < 1e-10 * scale);
    });
}

TEST_CASE("lossless cavity conserves energy over 1000 random configurations") {
    double worst = 0.0;
    testgen::for_all(1000, 12, [&](testgen::Rng& r) {
        const CavityConfig c = random_cavity(r, true);
        const double lambda = r.uniform(600e-9, 680e-9);
        const auto mode = resolve_mode(c, lambda);
        // Half of the cases sit exactly on a resonance, where the field is largest.
        double L = c.length;
        if (r.coin()) {
            const auto roots = resonance_positions(c, ScanAxis::Length, lambda, c.length, c.length + lambda);
            if (!roots.empty()) L = roots.front();
        }
        const auto p = response(c, mode, L, frequency_of(lambda));
        worst = std::max(worst, std::abs(p.R + p.T - 1.0));
    });
    CHECK(worst < 1e-9);
}

TEST_CASE("lossy cavities never gain energy") {
    testgen::for_all(200, 13, [](testgen::Rng& r) {
        const CavityConfig c = random_cavity(r, false);
        const double lambda = r.uniform(600e-9, 680e-9);
        const auto p = response(c, resolve_mode(c, lambda), c.length, frequency_of(lambda));
        CHECK(p.R + p.T <= 1.0 + 1e-12);
        CHECK(p.R >= 0.0);
        CHECK(p.T >= 0.0);
    });
}

TEST_CASE("tangential fields are continuous at every interface") {
    testgen::for_all(100, 14, [](testgen::Rng& r) {
        CavityConfig c = random_cavity(r, true);
        const double lambda = r.uniform(600e-9, 680e-9);
        const auto roots = resonance_positions(c, ScanAxis::Length, lambda, c.length, c.length + lambda);
        const double L = roots.empty() ? c.length : roots.front();
        const CavityField f(c, std::nullopt, L, frequency_of(lambda));
        const auto& segs = f.segments();
        double scale = 0.0;
        for (const auto& s : segs) scale = std::max(scale, std::abs(f.field_in(s, s.z0)));
        const Complex i(0.0, 1.0);
        for (size_t k = 0; k + 1 < segs.size(); ++k) {
            const auto& a = segs[k];
            const auto& b = segs[k + 1];
            REQUIRE(a.z1 == doctest::Approx(b.z0).epsilon(1e-12));
            const Complex E1 = f.field_in(a, a.z1), E2 = f.field_in(b, b.z0);
            CHECK(std::abs(E1 - E2) < 1e-9 * scale);
            const Complex beta = 2.0 * kPi * a.index * (a.z1 - a.z0) / lambda;
            const Complex H1 = a.index * (a.start.forward * std::exp(i * beta) - a.start.backward * std::exp(-i * beta));
            const Complex H2 = b.index * (b.start.forward - b.start.backward);
            CHECK(std::abs(H1 - H2) < 1e-9 * scale * std::abs(b.index));
        }
    });
}

TEST_CASE("resonances repeat every half wavelength in length") {
    testgen::for_all(20, 15, [](testgen::Rng& r) {
        CavityConfig c = random_cavity(r, r.coin());
        c.guoy_enabled = false;
        const double lambda = r.uniform(600e-9, 680e-9);
        const auto roots = resonance_positions(c, ScanAxis::Length, lambda, c.length, c.length + 6 * lambda);
        REQUIRE(roots.size() >= 10);
        // Each root reappears half a wavelength later.
        for (double x : roots) {
            auto it = std::lower_bound(roots.begin(), roots.end(), x + 0.5 * lambda * (1 - 1e-3));
            if (it == roots.end()) break;
            CHECK((*it - x) == doctest::Approx(0.5 * lambda).epsilon(1e-6));
        }
    });
}

TEST_CASE("bare cavity finesse follows the mirror reflectivity") {
    CavityConfig c;
    c.membrane_thickness = 0.0;
    c.length = 13.3e-6;
    c.guoy_enabled = false;
    const double lambda = 637e-9;
    const auto roots = resonance_positions(c, ScanAxis::Length, lambda, 13e-6, 13.4e-6);
    REQUIRE(!roots.empty());
    const auto peak = analyse_resonance(c, ScanAxis::Length, lambda, roots.front());
    const double R = stack_response(c.flat_mirror, kAir, lambda).R;
    const double airy = kPi * std::sqrt(R) / (1.0 - R);
    CHECK(peak.finesse == doctest::Approx(airy).epsilon(2e-3));
    CHECK(peak.fsr == doctest::Approx(lambda / 2).epsilon(1e-6));
    CHECK(peak.peak_transmission == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(peak.character == doctest::Approx(0.0));
}

TEST_CASE("mode character is a fraction and tracks the membrane") {
    CavityConfig c;
    testgen::for_all(20, 16, [&](testgen::Rng& r) {
        const double lambda = r.uniform(630e-9, 640e-9);
        const auto roots = resonance_positions(c, ScanAxis::Length, lambda, 22e-6, 22.4e-6);
        REQUIRE(!roots.empty());
        const double ch = mode_character(c, roots.front(), frequency_of(lambda));
        CHECK(ch > 0.0);
        CHECK(ch < 1.0);
    });
}

TEST_CASE("configuration invariants are enforced") {
    CavityConfig c;
    c.membrane_thickness = c.length;
    CHECK_THROWS_AS(c.validate(), InvalidConfigError);
    c = CavityConfig{};
    c.length = -1e-6;
    CHECK_THROWS_AS(c.validate(), InvalidConfigError);
    c = CavityConfig{};
    c.fiber_roc = 10e-6;
    CHECK_THROWS_AS(c.validate(), StabilityError);
}

TEST_CASE("spectrum map conserves the integrated line strength") {
    CavityConfig c;
    const auto map = spectrum_map(c, 22e-6, 22e-6, 1, 450e12, 490e12, 4000);
    REQUIRE(map.frequencies.size() == 4000);
    const double area = std::accumulate(map.transmission.begin(), map.transmission.end(), 0.0) * map.bin_width;
    double expect = 0.0;
    for (double nu : resonance_positions(c, ScanAxis::Frequency, 22e-6, 449e12, 491e12)) {
        const auto pk = analyse_resonance(c, ScanAxis::Frequency, 22e-6, nu);
        const double inside = (std::atan((490e12 - nu) / (0.5 * pk.fwhm)) - std::atan((450e12 - nu) / (0.5 * pk.fwhm))) / kPi;
        expect += 0.5 * kPi * pk.fwhm * pk.peak_transmission * inside;
    }
    CHECK(area == doctest::Approx(expect).epsilon(0.02));
    for (double v : map.transmission) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-9);
    }
    CHECK_THROWS_AS(spectrum_map(c, 22e-6, 21e-6, 2, 450e12, 490e12, 10), InvalidConfigError);
}

TEST_CASE("spectrum map shows avoided crossings between membrane and air ladders") {
    CavityConfig c;
    const auto map = spectrum_map(c, 20e-6, 22e-6, 41, 455e12, 485e12, 3000);
    // Along each length the brightest lines must never merge: the smallest spacing between
    // adjacent resonances stays a sizeable fraction of the mean spacing.
    double min_gap = 1e300;
    for (double L : map.lengths) {
        const auto roots = resonance_positions(c, ScanAxis::Frequency, L, 455e12, 485e12);
        for (size_t k = 1; k < roots.size(); ++k) min_gap = std::min(min_gap, roots[k] - roots[k - 1]);
    }
    const double mean = kSpeedOfLight / (2.0 * c.with_length(21e-6).optical_length());
    CHECK(min_gap > 0.2 * mean);
    CHECK(min_gap < 0.9 * mean);
}

TEST_CASE("sweeps are independent of the worker count") {
    CavityConfig c;
    const auto a = finesse_vs_wavelength(c, 634e-9, 640e-9, 9, 1);
    const auto b = finesse_vs_wavelength(c, 634e-9, 640e-9, 9, 3);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].finesse == b[i].finesse);
        CHECK(a[i].length == b[i].length);
    }
}
