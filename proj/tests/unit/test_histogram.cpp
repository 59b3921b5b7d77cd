#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fpcav/histogram.hpp"
#include "gen.hpp"

using namespace fpcav;

namespace {

// Independent quantile: numpy's default ("linear") definition written out directly.
double ref_quantile(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const auto lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace

TEST_CASE("quantiles") {
    const std::vector<double> x{5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(quantile(x, 0.0) == 1.0);
    CHECK(quantile(x, 1.0) == 5.0);
    CHECK(quantile(x, 0.5) == 3.0);
    CHECK(quantile(x, 0.25) == 2.0);
    CHECK(quantile({1.0, 2.0}, 0.5) == 1.5);
    CHECK_THROWS_AS(quantile({}, 0.5), InvalidConfigError);
    testgen::for_all(100, 21, [](testgen::Rng& r) {
        std::vector<double> v(static_cast<size_t>(r.integer(1, 300)));
        for (double& e : v) e = r.uniform(-5.0, 5.0);
        const double p = r.unit();
        CHECK(quantile(v, p) == doctest::Approx(ref_quantile(v, p)).epsilon(1e-14));
    });
}

TEST_CASE("Freedman-Diaconis width on normal samples") {
    std::mt19937_64 g(42);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(1000);
    for (double& v : x) v = n(g);
    const double iqr = ref_quantile(x, 0.75) - ref_quantile(x, 0.25);
    const double w = freedman_diaconis_width(x);
    CHECK(w == doctest::Approx(2.0 * iqr * std::pow(1000.0, -1.0 / 3.0)).epsilon(1e-14));
    // Normal IQR is 1.349 sigma.
    CHECK(w == doctest::Approx(2.0 * 1.349 / 10.0).epsilon(0.1));
    const auto h = make_histogram({x, BinRule::FreedmanDiaconis, 0.0});
    CHECK(h.width == w);
}

TEST_CASE("histogram structure") {
    testgen::for_all(100, 22, [](testgen::Rng& r) {
        std::vector<double> v(static_cast<size_t>(r.integer(2, 500)));
        for (double& e : v) e = r.log_uniform(1e-3, 1e3);
        const double w = r.log_uniform(1e-2, 1e2);
        const auto h = make_histogram({v, BinRule::FixedWidth, w});
        REQUIRE(h.edges.size() == h.counts.size() + 1);
        CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == v.size());
        CHECK(h.edges.front() == *std::min_element(v.begin(), v.end()));
        CHECK(h.edges.back() >= *std::max_element(v.begin(), v.end()));
        for (size_t i = 1; i < h.edges.size(); ++i)
            CHECK(h.edges[i] - h.edges[i - 1] == doctest::Approx(w).epsilon(1e-9));
        // Every sample lies in the bin its count was added to.
        std::vector<std::size_t> recount(h.counts.size(), 0);
        for (double e : v) {
            auto it = std::upper_bound(h.edges.begin(), h.edges.end(), e);
            size_t b = static_cast<size_t>(it - h.edges.begin()) - 1;
            b = std::min(b, recount.size() - 1);
            ++recount[b];
        }
        CHECK(recount == h.counts);
    });
}

TEST_CASE("fixed width and rule names") {
    const auto h = make_histogram({{0.0, 0.1, 0.2, 0.9, 1.0}, BinRule::FixedWidth, 0.5});
    CHECK(h.counts == std::vector<std::size_t>{3, 2});
    CHECK(parse_bin_rule("freedman-diaconis") == BinRule::FreedmanDiaconis);
    CHECK(parse_bin_rule("fixed-width") == BinRule::FixedWidth);
    CHECK_THROWS_AS(parse_bin_rule("sturges"), InvalidConfigError);
    CHECK_THROWS_AS(make_histogram({{1.0, 2.0}, BinRule::FixedWidth, 0.0}), InvalidConfigError);
    CHECK_THROWS_AS(make_histogram({{1.0, NAN}, BinRule::FixedWidth, 1.0}), InvalidConfigError);
    CHECK_THROWS_AS(freedman_diaconis_width({1.0, 1.0, 1.0}), InvalidConfigError);
    CHECK_THROWS_AS(freedman_diaconis_width({1.0}), InvalidConfigError);
}
