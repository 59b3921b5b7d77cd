#include "fpcav/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fpcav/core.hpp"

namespace fpcav {

BinRule parse_bin_rule(std::string_view s) {
    if (s == "freedman-diaconis") return BinRule::FreedmanDiaconis;
    if (s == "fixed-width") return BinRule::FixedWidth;
    throw InvalidConfigError("unknown binning rule '" + std::string(s) + "'");
}

double quantile(std::vector<double> x, double p) {
    if (x.empty()) throw InvalidConfigError("quantile of an empty sample");
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double freedman_diaconis_width(const std::vector<double>& samples) {
    if (samples.size() < 2) throw InvalidConfigError("Freedman-Diaconis binning needs at least 2 samples");
    const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
    if (!(iqr > 0.0)) throw InvalidConfigError("Freedman-Diaconis binning needs a non-zero interquartile range");
    return 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(samples.size()));
}

Histogram make_histogram(const HistogramSpec& spec) {
    if (spec.samples.empty()) throw InvalidConfigError("histogram of an empty sample");
    for (double v : spec.samples)
        if (!std::isfinite(v)) throw InvalidConfigError("histogram samples must be finite");
    Histogram h;
    h.width = spec.rule == BinRule::FreedmanDiaconis ? freedman_diaconis_width(spec.samples) : spec.width;
    if (!(h.width > 0.0)) throw InvalidConfigError("bin width must be positive");
    const auto [mn, mx] = std::minmax_element(spec.samples.begin(), spec.samples.end());
    // Half-open bins except the last, which is closed so a range that divides evenly
    // does not grow a bin holding only the maximum.
    auto bins = std::max<size_t>(1, static_cast<size_t>(std::ceil((*mx - *mn) / h.width)));
    if (*mn + h.width * static_cast<double>(bins) < *mx) ++bins;
    if (bins > 10'000'000) throw InvalidConfigError("bin width too small for the sample range");
    h.counts.assign(bins, 0);
    for (size_t i = 0; i <= bins; ++i) h.edges.push_back(*mn + h.width * static_cast<double>(i));
    for (double v : spec.samples) {
        auto b = static_cast<size_t>(std::floor((v - *mn) / h.width));
        ++h.counts[std::min(b, bins - 1)];
    }
    return h;
}

}  // namespace fpcav
