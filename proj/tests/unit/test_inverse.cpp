#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "fpcav/inverse.hpp"
#include "gen.hpp"

using namespace fpcav;

namespace {

constexpr double kLambda = 637e-9;

BareCavityParams reference_truth() {
    return BareCavityParams::from(std::sqrt(78e-6), 8e-6, Complex(0.61, 0.14), 0.69);
}

std::vector<double> axis_for(const BareCavityParams& p, int n = 801, double span = 20.0) {
    const double dl = lineshape_coefficients(p, kLambda).deltaL;
    std::vector<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = dl * span * (2.0 * i / (n - 1) - 1.0);
    return x;
}

BareCavityParams recover(const SpectralTrace& tr) {
    const auto fit = fit_lineshapes(tr);
    const double F = kLambda / (2.0 * fit.coeffs.deltaL);
    return solve_bare_cavity_params(fit.coeffs, F, 2.0 * kPi * kSpeedOfLight / kLambda);
}

BareCavityParams random_params(testgen::Rng& r) {
    const double t2 = r.log_uniform(10e-6, 500e-6);
    const double alpha = r.log_uniform(0.5e-6, 50e-6);
    const double mag = r.uniform(0.3, 0.95), ph = r.uniform(-0.6, 0.6);
    return BareCavityParams::from(std::sqrt(t2), alpha, std::polar(mag, ph), r.uniform(0.4, 0.95));
}

LadderModel ladder_truth(double td = 10.5e-6) {
    LadderModel m;
    m.membrane_thickness = td;
    m.piezo = {15e-6, 12e-6, 1.5e-6, -0.8e-6};
    return m;
}

}  // namespace

TEST_CASE("bare parameters validate their invariants") {
    const auto p = reference_truth();
    CHECK(p.t * p.t + p.r * p.r + p.alpha == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.r < 0.0);
    CHECK(p.finesse() == doctest::Approx(kPi / 86e-6));
    CHECK_THROWS_AS(BareCavityParams::from(0.0, 1e-6, Complex(0.5, 0.0), 0.5), InvalidConfigError);
    CHECK_THROWS_AS(BareCavityParams::from(0.01, -1e-6, Complex(0.5, 0.0), 0.5), InvalidConfigError);
    CHECK_THROWS_AS(BareCavityParams::from(0.01, 1e-6, Complex(1.2, 0.0), 0.5), InvalidConfigError);
    CHECK_THROWS_AS(BareCavityParams::from(0.01, 1e-6, Complex(0.5, 0.0), 1.5), InvalidConfigError);
}

TEST_CASE("lineshape coefficients") {
    const auto p = reference_truth();
    const auto c = lineshape_coefficients(p, kLambda);
    // A length scan moves through one free spectral range per half wavelength.
    CHECK(c.deltaL == doctest::Approx(kLambda / (2.0 * p.finesse())).epsilon(1e-12));
    CHECK(transmission_lineshape(c, 0.0) == doctest::Approx(c.a3 / kPi));
    CHECK(transmission_lineshape(c, 0.5 * c.deltaL) == doctest::Approx(0.5 * c.a3 / kPi));
    CHECK(reflection_lineshape(c, 1e6 * c.deltaL) == doctest::Approx(c.y0).epsilon(1e-6));
    CHECK(c.a3 > 0.0);
    // Dispersive term is odd in detuning.
    const double dl = 0.7 * c.deltaL;
    const double odd = reflection_lineshape(c, dl) - reflection_lineshape(c, -dl);
    CHECK(odd == doctest::Approx(2.0 * c.a2 * dl / kPi * (0.25 * c.deltaL * c.deltaL) /
                                 (0.25 * c.deltaL * c.deltaL + dl * dl)));
    // eta = 0 and eps1 = 0 switch off everything but the prompt term.
    const auto q = BareCavityParams::from(p.t, p.alpha, Complex(0.0, 0.0), 0.0);
    const auto cq = lineshape_coefficients(q, kLambda);
    CHECK(cq.y0 == 0.0);
    CHECK(cq.a1 == 0.0);
    CHECK(cq.a3 == 0.0);
}

namespace {

bool same_params(const BareCavityParams& a, const BareCavityParams& b, double tol) {
    return std::abs(a.t - b.t) <= tol * b.t && std::abs(a.alpha - b.alpha) <= 100.0 * tol * b.alpha &&
           std::abs(a.eta - b.eta) <= tol && std::abs(a.eps1 - b.eps1) <= tol * b.eps1;
}

}  // namespace

TEST_CASE("closure: the truth is always a root, and a unique root is returned") {
    const double omega = 2.0 * kPi * kSpeedOfLight / kLambda;
    int unique = 0;
    const int cases = 200;
    testgen::for_all(cases, 11, [&](testgen::Rng& r) {
        const auto p = random_params(r);
        const auto c = lineshape_coefficients(p, kLambda);
        CHECK(closure_residuals(p, c, p.finesse(), kLambda).max() < 1e-12);
        const auto roots = closure_roots(c, p.finesse(), omega);
        REQUIRE_FALSE(roots.empty());
        int hits = 0;
        for (const auto& k : roots) {
            CHECK(closure_residuals(k, c, p.finesse(), kLambda).max() < 1e-8);
            if (same_params(k, p, 1e-6)) ++hits;
        }
        CHECK(hits == 1);
        if (roots.size() == 1) {
            ++unique;
            const auto s = solve_bare_cavity_params(c, p.finesse(), omega);
            CHECK(same_params(s, p, 1e-6));
        } else {
            CHECK_THROWS_AS(solve_bare_cavity_params(c, p.finesse(), omega), InconsistentDataError);
        }
    });
    // Ambiguity is the exception, not the rule.
    CHECK(unique > cases * 3 / 4);
}

TEST_CASE("closure at the reference parameters") {
    const auto p = reference_truth();
    const auto c = lineshape_coefficients(p, kLambda);
    const double omega = 2.0 * kPi * kSpeedOfLight / kLambda;
    REQUIRE(closure_roots(c, p.finesse(), omega).size() == 1);
    const auto s = solve_bare_cavity_params(c, p.finesse(), omega);
    CHECK(s.t == doctest::Approx(8.8e-3).epsilon(0.01));
    CHECK(s.t * s.t == doctest::Approx(78e-6).epsilon(1e-6));
    CHECK(s.alpha == doctest::Approx(8e-6).epsilon(0.01));
    CHECK(s.eps1 == doctest::Approx(0.69).epsilon(0.01));
    CHECK(s.eta.real() == doctest::Approx(0.61).epsilon(0.01));
    CHECK(s.eta.imag() == doctest::Approx(0.14).epsilon(0.01));
    CHECK(s.finesse() == doctest::Approx(36530.0).epsilon(2e-3));
    CHECK(s.r == doctest::Approx(-0.999957).epsilon(1e-6));
}

TEST_CASE("closure reports inconsistent coefficients") {
    auto c = lineshape_coefficients(reference_truth(), kLambda);
    const double omega = 2.0 * kPi * kSpeedOfLight / kLambda;
    auto neg = c;
    neg.a3 = -1.0;
    CHECK_THROWS_AS(solve_bare_cavity_params(neg, 36000.0, omega), InconsistentDataError);
    CHECK_THROWS_AS(solve_bare_cavity_params(c, 2.0, omega), InconsistentDataError);
    auto big = c;
    big.y0 = 5.0;  // reflection above unity off resonance
    CHECK_THROWS_AS(solve_bare_cavity_params(big, 36000.0, omega), InconsistentDataError);
}

TEST_CASE("noiseless lineshape round trip") {
    const double omega = 2.0 * kPi * kSpeedOfLight / kLambda;
    testgen::for_all(20, 12, [&](testgen::Rng& r) {
        const auto p = random_params(r);
        const auto tr = lineshape_forward(p, axis_for(p), kLambda);
        const auto fit = fit_lineshapes(tr);
        const auto c = lineshape_coefficients(p, kLambda);
        CHECK(fit.coeffs.deltaL == doctest::Approx(c.deltaL).epsilon(1e-6));
        CHECK(fit.coeffs.a3 == doctest::Approx(c.a3).epsilon(1e-6));
        CHECK(fit.coeffs.a1 == doctest::Approx(c.a1).epsilon(1e-6));
        CHECK(fit.coeffs.y0 == doctest::Approx(c.y0).epsilon(1e-6));
        const auto roots = closure_roots(fit.coeffs, kLambda / (2.0 * fit.coeffs.deltaL), omega);
        int hits = 0;
        for (const auto& k : roots)
            if (same_params(k, p, 1e-2)) ++hits;
        CHECK(hits == 1);
    });
    const auto p = reference_truth();
    const auto s = recover(lineshape_forward(p, axis_for(p), kLambda));
    CHECK(same_params(s, p, 1e-2));
}

TEST_CASE("pure Lorentzian reflection gives no dispersive term") {
    const auto p = BareCavityParams::from(std::sqrt(78e-6), 8e-6, Complex(0.61, 0.0), 0.69);
    const auto fit = fit_lineshapes(synthesize_trace(p, axis_for(p), kLambda, TraceNoise{0.01, 1, 9}));
    CHECK(std::abs(fit.coeffs.a2) < 3.0 * fit.std_error[2]);
}

TEST_CASE("noise level in the flat wings") {
    const auto p = reference_truth();
    const auto tr = synthesize_trace(p, axis_for(p, 4001, 200.0), kLambda, TraceNoise{0.01, 1, 21});
    const auto clean = lineshape_forward(p, tr.x, kLambda);
    double peak = 0.0;
    for (double v : clean.R) peak = std::max(peak, std::abs(v));
    double s2 = 0.0;
    int n = 0;
    for (size_t i = 0; i < tr.x.size() / 5; ++i, ++n) s2 += std::pow(tr.R[i] - clean.R[i], 2);
    CHECK(std::sqrt(s2 / n) == doctest::Approx(0.01 * peak).epsilon(0.2));
    const auto same = synthesize_trace(p, tr.x, kLambda, TraceNoise{0.0, 1, 21});
    CHECK(same.R == clean.R);
    CHECK(same.T == clean.T);
}

TEST_CASE("a shifted trace recovers its centre") {
    const auto p = reference_truth();
    auto x = axis_for(p);
    const double shift = 0.37 * lineshape_coefficients(p, kLambda).deltaL;
    auto tr = lineshape_forward(p, x, kLambda);
    for (double& v : tr.x) v += shift;
    const auto fit = fit_lineshapes(tr);
    CHECK(fit.centre == doctest::Approx(shift).epsilon(1e-6));
}

TEST_CASE("noisy fits: error bars cover the truth") {
    const auto p = reference_truth();
    const auto c = lineshape_coefficients(p, kLambda);
    const std::array<double, 5> truth{c.y0, c.a1, c.a2, c.a3, c.deltaL};
    const auto x = axis_for(p);
    const int runs = 60;
    std::array<int, 5> inside{};
    for (int s = 0; s < runs; ++s) {
        const auto tr = synthesize_trace(p, x, kLambda, TraceNoise{0.01, 64, static_cast<std::uint64_t>(1000 + s)});
        const auto fit = fit_lineshapes(tr);
        CHECK(fit.chi2_per_dof < 2.0);
        const std::array<double, 5> got{fit.coeffs.y0, fit.coeffs.a1, fit.coeffs.a2, fit.coeffs.a3, fit.coeffs.deltaL};
        for (size_t k = 0; k < 5; ++k)
            if (std::abs(got[k] - truth[k]) < 3.0 * fit.std_error[k]) ++inside[k];
    }
    for (size_t k = 0; k < 5; ++k) {
        INFO("coefficient " << k);
        CHECK(inside[k] >= runs * 95 / 100);
    }
}

TEST_CASE("noise estimate tracks the injected level") {
    const auto p = reference_truth();
    const auto c = lineshape_coefficients(p, kLambda);
    const auto fit = fit_lineshapes(synthesize_trace(p, axis_for(p), kLambda, TraceNoise{0.01, 1, 77}));
    CHECK(fit.noise_transmission == doctest::Approx(0.01 * c.a3 / kPi).epsilon(0.25));
}

TEST_CASE("averaging shrinks the width uncertainty") {
    const auto p = reference_truth();
    const auto x = axis_for(p);
    const auto one = fit_lineshapes(synthesize_trace(p, x, kLambda, TraceNoise{0.02, 1, 5}));
    const auto many = fit_lineshapes(synthesize_trace(p, x, kLambda, TraceNoise{0.02, 100, 5}));
    CHECK(many.std_error[4] == doctest::Approx(one.std_error[4] / 10.0).epsilon(0.2));
}

TEST_CASE("synthesis is deterministic in the seed") {
    const auto p = reference_truth();
    const auto x = axis_for(p, 101);
    const auto a = synthesize_trace(p, x, kLambda, TraceNoise{0.01, 1, 3});
    const auto b = synthesize_trace(p, x, kLambda, TraceNoise{0.01, 1, 3});
    const auto c = synthesize_trace(p, x, kLambda, TraceNoise{0.01, 1, 4});
    CHECK(a.R == b.R);
    CHECK(a.T == b.T);
    CHECK(a.T != c.T);
    CHECK_THROWS_AS(synthesize_trace(p, x, kLambda, TraceNoise{-0.1, 1, 3}), InvalidConfigError);
}

TEST_CASE("flat data is rejected") {
    SpectralTrace tr;
    for (int i = 0; i < 50; ++i) {
        tr.x.push_back(i * 1e-12);
        tr.T.push_back(0.0);
        tr.R.push_back(0.9);
    }
    CHECK_THROWS_AS(fit_lineshapes(tr), FitQualityError);
    tr.x[10] = tr.x[9];
    CHECK_THROWS_AS(fit_lineshapes(tr), InvalidConfigError);
}

TEST_CASE("ladder fit: noiseless recovery") {
    const auto truth = ladder_truth();
    LadderSynthOptions o;
    const auto obs = synthesize_ladder(truth, o);
    REQUIRE(obs.size() > 100);
    const auto fit = fit_resonance_ladder(obs);
    CHECK(std::abs(fit.model.membrane_thickness - truth.membrane_thickness) < 0.01e-6);
    for (size_t i = 0; i < fit.controls.size(); ++i)
        CHECK(std::abs(fit.lengths[i] - truth.length(fit.controls[i])) < 0.01e-6);
    CHECK(fit.residual_rms < 1e6);
    CHECK(fit.branches >= 3);
    CHECK(fit.warning.empty());
}

TEST_CASE("ladder fit: 50 GHz frequency noise") {
    const auto truth = ladder_truth();
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LadderSynthOptions o;
        o.noise_hz = 50e9;
        o.seed = seed;
        const auto fit = fit_resonance_ladder(synthesize_ladder(truth, o));
        INFO("seed " << seed << " t_d " << fit.model.membrane_thickness);
        CHECK(std::abs(fit.model.membrane_thickness - truth.membrane_thickness) < 0.2e-6);
        CHECK(fit.residual_rms == doctest::Approx(50e9).epsilon(0.3));
        if (std::abs(fit.model.membrane_thickness - truth.membrane_thickness) < 3.0 * fit.thickness_error + 1e-9) ++ok;
    }
    CHECK(ok >= 4);
}

TEST_CASE("ladder fit: random truths") {
    testgen::for_all(6, 13, [](testgen::Rng& r) {
        auto truth = ladder_truth(r.uniform(4e-6, 15e-6));
        truth.piezo[0] = truth.membrane_thickness + r.uniform(3e-6, 8e-6);
        truth.piezo[1] = r.uniform(6e-6, 14e-6);
        const auto fit = fit_resonance_ladder(synthesize_ladder(truth, LadderSynthOptions{}));
        CHECK(std::abs(fit.model.membrane_thickness - truth.membrane_thickness) < 0.01e-6);
    });
}

TEST_CASE("ladder fit: bare cavity") {
    const auto fit = fit_resonance_ladder(synthesize_ladder(ladder_truth(0.0), LadderSynthOptions{}));
    CHECK(std::abs(fit.model.membrane_thickness) < 0.01e-6);
    // Uniform free spectral range: consecutive resonances in a scan share one spacing.
    for (double v : {0.0, 0.5, 1.0}) {
        const double L = fit.model.length(v);
        const auto truth = ladder_truth(0.0);
        CHECK(L == doctest::Approx(truth.length(v)).epsilon(1e-6));
    }
}

TEST_CASE("ladder fit: a short scan flags identifiability") {
    auto truth = ladder_truth();
    truth.piezo = {15e-6, 0.2e-6, 0.0, 0.0};
    LadderSynthOptions o;
    o.scans = 12;
    const auto fit = fit_resonance_ladder(synthesize_ladder(truth, o));
    CHECK_FALSE(fit.warning.empty());
}

TEST_CASE("ladder fit: residuals are unbiased") {
    LadderSynthOptions o;
    o.noise_hz = 50e9;
    o.seed = 99;
    const auto fit = fit_resonance_ladder(synthesize_ladder(ladder_truth(), o));
    CHECK(std::abs(fit.residual_mean) < 0.1 * 50e9);
    CHECK(fit.mode_numbers.size() == fit.residuals.size());
}

TEST_CASE("ladder fit rejects too little data") {
    std::vector<LadderObservation> few{{0.0, 450e12}, {0.0, 460e12}, {1.0, 455e12}};
    CHECK_THROWS_AS(fit_resonance_ladder(few), InvalidConfigError);
}
