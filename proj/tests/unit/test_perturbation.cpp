#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fpcav/perturbation.hpp"
#include "fpcav/presets.hpp"
#include "gen.hpp"

using namespace fpcav;

namespace {

constexpr double kLambda = 637e-9;
constexpr double kNd = 2.417;

GaussianModePair mode_near(double L_target, double td, double lambda = kLambda) {
    const auto Ls = fundamental_resonance_lengths(61e-6, td, kNd, lambda, L_target - lambda / 4, L_target + lambda / 4);
    REQUIRE_FALSE(Ls.empty());
    return match_membrane_cavity_mode(61e-6, Ls.front(), td, kNd, lambda);
}

// Independent estimate of the sliver integral: stratified in r^2 and z, antithetic and
// randomly rotated in angle.
double monte_carlo_coupling(const BasisMode& m, const BasisMode& ref, const PerturbationVolume& v, testgen::Rng& rng,
                            int strata_r, int strata_z) {
    const double a2 = v.radial_extent * v.radial_extent;
    double sum = 0.0;
    for (int i = 0; i < strata_r; ++i) {
        for (int k = 0; k < strata_z; ++k) {
            const double s = a2 * (i + rng.unit()) / strata_r;
            const double r = std::sqrt(s);
            const double z0 = v.surface(r);
            const double depth = v.membrane_thickness - z0;
            if (depth <= 0.0) continue;
            const double z = z0 + depth * (k + rng.unit()) / strata_z;
            const double th = 2.0 * kPi * rng.unit();
            double f = 0.0;
            for (int q = 0; q < 4; ++q) {
                const double t = th + 0.5 * kPi * q;
                const double x = r * std::cos(t), y = r * std::sin(t);
                f += m.value_air(x, y, z) * ref.value_air(x, y, z) + m.value_air(-x, -y, z) * ref.value_air(-x, -y, z);
            }
            // dV = pi d(r^2) dz (angle averaged)
            sum += f / 8.0 * kPi * (a2 / strata_r) * (depth / strata_z);
        }
    }
    return v.contrast * sum;
}

// Averaged over one membrane period (capped for very thin membranes, where the period
// spans most of the visible band).
double mean_correction_norm(double td, int samples) {
    const double period = std::min(kLambda * kLambda / (2.0 * kNd * td), 100e-9);
    double s = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double lam = kLambda + period * ((k + 0.5) / samples - 0.5);
        const auto mode = mode_near(22e-6, td, lam);
        const auto st = perturbed_state(build_perturbation_basis(mode, kSpeedOfLight / lam),
                                        PerturbationVolume::from_mode(mode));
        s += st.correction_norm;
    }
    return s / samples;
}

}  // namespace

TEST_CASE("sliver geometry") {
    const auto mode = mode_near(22e-6, 10.5e-6);
    const auto v = PerturbationVolume::from_mode(mode);
    CHECK(v.contrast == doctest::Approx(kNd * kNd - 1.0));
    CHECK(v.depth(0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(v.depth(3e-6) > 0.0);
    CHECK(v.volume() > 0.0);
    // Paraxial sag r^2 / 2R.
    const double r = 2e-6;
    CHECK(v.depth(r) == doctest::Approx(r * r / (2.0 * std::abs(v.interface_roc))).epsilon(1e-3));
}

TEST_CASE("no coupling without index contrast") {
    const auto mode = match_membrane_cavity_mode(61e-6, 22e-6, 10.5e-6, 1.0, kLambda);
    const auto basis = build_perturbation_basis(mode, kSpeedOfLight / kLambda);
    const auto v = PerturbationVolume::from_mode(mode);
    CHECK(v.contrast == 0.0);
    const auto st = perturbed_state(basis, v);
    CHECK(st.correction_norm == 0.0);
    for (const auto& t : st.terms) CHECK(t.coupling == 0.0);
}

TEST_CASE("odd transverse orders do not couple to the fundamental") {
    BasisOptions opt;
    opt.even_only = false;
    opt.max_order = 4;
    const auto mode = mode_near(22e-6, 10.5e-6);
    const auto basis = build_perturbation_basis(mode, kSpeedOfLight / kLambda, opt);
    const auto v = PerturbationVolume::from_mode(mode);
    const auto st = perturbed_state(basis, v);
    double even_max = 0.0;
    int odd = 0;
    for (const auto& t : st.terms)
        if (t.mode.index.p % 2 == 0 && t.mode.index.q % 2 == 0) even_max = std::max(even_max, std::abs(t.coupling));
    REQUIRE(even_max > 0.0);
    for (const auto& t : st.terms) {
        if (t.mode.index.p % 2 == 0 && t.mode.index.q % 2 == 0) continue;
        ++odd;
        INFO(t.mode.index.label());
        CHECK(std::abs(t.coupling) < 1e-9 * even_max);
    }
    CHECK(odd > 0);
}

TEST_CASE("basis is orthonormal within each family") {
    const auto mode = mode_near(22e-6, 10.5e-6);
    const auto basis = build_perturbation_basis(mode, kSpeedOfLight / kLambda);
    std::vector<BasisMode> all = basis.modes;
    all.push_back(basis.reference);
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i; j < all.size(); ++j) {
            if (all[i].index.p != all[j].index.p || all[i].index.q != all[j].index.q) continue;
            const double o = basis_overlap(all[i], all[j]);
            CHECK(o == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-6).scale(1.0));
        }
}

TEST_CASE("quadrature agrees with a Monte Carlo estimate") {
    testgen::Rng rng(20261015);
    for (double td : {3e-6, 10.5e-6}) {
        const auto mode = mode_near(22e-6, td);
        const auto basis = build_perturbation_basis(mode, kSpeedOfLight / kLambda);
        const auto v = PerturbationVolume::from_mode(mode);
        QuadratureOptions tight;
        tight.tolerance = 1e-5;
        tight.max_refinements = 6;
        std::vector<std::pair<double, const BasisMode*>> ranked;
        for (const auto& m : basis.modes)
            ranked.emplace_back(std::abs(coupling_coefficient(m, basis.reference, v, tight)), &m);
        std::sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.first > b.first; });
        for (size_t k = 0; k < std::min<size_t>(3, ranked.size()); ++k) {
            const auto& m = *ranked[k].second;
            const double quad = coupling_coefficient(m, basis.reference, v, tight);
            const double mc = monte_carlo_coupling(m, basis.reference, v, rng, 1500, 6);
            INFO("t_d " << td << " mode " << m.index.label() << " quad " << quad << " mc " << mc);
            CHECK(mc == doctest::Approx(quad).epsilon(1e-2));
        }
        // The reference with itself as a sanity anchor.
        const double self_q = coupling_coefficient(basis.reference, basis.reference, v, tight);
        const double self_mc = monte_carlo_coupling(basis.reference, basis.reference, v, rng, 1500, 6);
        CHECK(self_mc == doctest::Approx(self_q).epsilon(1e-2));
    }
}

TEST_CASE("correction grows with membrane thickness and vanishes without one") {
    std::vector<double> norms;
    for (double td : {1e-6, 3e-6, 5e-6, 10.5e-6}) norms.push_back(mean_correction_norm(td, 16));
    for (size_t i = 1; i < norms.size(); ++i) {
        INFO("step " << i << ": " << norms[i - 1] << " -> " << norms[i]);
        CHECK(norms[i] > norms[i - 1]);
    }
    const double thin = mean_correction_norm(0.05e-6, 8);
    CHECK(thin < 0.05 * norms.back());
    CHECK(thin < 1e-3);
}

TEST_CASE("degenerate partner raises DegeneracyError") {
    const auto mode = mode_near(22e-6, 10.5e-6);
    const auto basis = build_perturbation_basis(mode, kSpeedOfLight / kLambda);
    const auto v = PerturbationVolume::from_mode(mode);
    bool thrown = false;
    try {
        (void)perturbed_state(basis, v, 10.0);
    } catch (const DegeneracyError& e) {
        thrown = true;
        CHECK_FALSE(e.mode_label().empty());
        CHECK(e.cavity_length() == doctest::Approx(mode.length));
    }
    CHECK(thrown);
    CHECK_NOTHROW((void)perturbed_state(basis, v));
}

TEST_CASE("clipping loss falls with aperture radius") {
    const auto mode = mode_near(22e-6, 10.5e-6);
    const auto st = perturbed_state(build_perturbation_basis(mode, kSpeedOfLight / kLambda),
                                    PerturbationVolume::from_mode(mode));
    const double w = mode.fiber_mirror_radius();
    double prev = std::numeric_limits<double>::infinity();
    for (double f : {1.0, 1.5, 2.0, 2.5, 3.0}) {
        const double l = clipping_loss(st, f * w);
        CHECK(l >= 0.0);
        CHECK(l <= prev);
        prev = l;
    }
    CHECK(clipping_loss(st, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK_THROWS_AS((void)clipping_loss(st, 0.0), InvalidConfigError);
    // Pure Gaussian: round-trip fraction outside radius a is 2 exp(-2 a^2 / w^2).
    const auto bare = unperturbed_state(build_perturbation_basis(mode, kSpeedOfLight / kLambda));
    CHECK(clipping_loss(bare, 1.5 * w) == doctest::Approx(2.0 * std::exp(-2.0 * 2.25)).epsilon(2e-2));
}

TEST_CASE("clipping sweep: monotone in radius with dips at near-degeneracies") {
    const CavityConfig cfg = reference_cavity();
    const auto ref = match_membrane_cavity_mode(cfg.fiber_roc, cfg.length, cfg.membrane_thickness, kNd, kLambda);
    const double w = ref.fiber_mirror_radius();
    const std::vector<double> radii{2.5 * w, 3.0 * w, 3.5 * w};
    const auto pts = finesse_vs_length_with_clipping(cfg, 12e-6, 32e-6, radii);
    REQUIRE(pts.size() > 40);

    std::vector<const ClippingPoint*> valid;
    for (const auto& p : pts)
        if (p.valid) valid.push_back(&p);
    REQUIRE(valid.size() >= pts.size() * 9 / 10);

    const double mirror_only = 2.0 * kPi / (stack_response(cfg.flat_mirror, kAir, kLambda).T +
                                            stack_response(cfg.fiber_mirror, kAir, kLambda).T);
    for (const auto* p : valid) {
        INFO("L = " << p->length);
        for (size_t k = 1; k < radii.size(); ++k) {
            CHECK(p->finesse[k] >= p->finesse[k - 1] * (1.0 - 1e-9));
            CHECK(p->loss[k] <= p->loss[k - 1] * (1.0 + 1e-9) + 1e-15);
        }
        CHECK(p->finesse.back() <= mirror_only * (1.0 + 1e-9));
    }

    // A sharp local dip at the tightest aperture must sit on a local minimum of the
    // spacing to the nearest coupled mode, and that spacing must be small.
    std::vector<double> gaps;
    for (const auto* p : valid) gaps.push_back(p->nearest_gap);
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const double median_gap = sorted[sorted.size() / 2];
    int dips = 0;
    for (size_t i = 1; i + 1 < valid.size(); ++i) {
        const double f = valid[i]->finesse.front();
        const double nb = std::min(valid[i - 1]->finesse.front(), valid[i + 1]->finesse.front());
        if (!(f < 0.9 * nb)) continue;
        ++dips;
        INFO("dip at L = " << valid[i]->length << " gap " << gaps[i]);
        CHECK(gaps[i] <= std::min(gaps[i - 1], gaps[i + 1]));
        CHECK(gaps[i] < 0.25 * median_gap);
    }
    CHECK(dips >= 1);
}
