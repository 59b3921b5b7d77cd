#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace fpcav {

enum class BinRule { FreedmanDiaconis, FixedWidth };

BinRule parse_bin_rule(std::string_view s);

struct HistogramSpec {
    std::vector<double> samples;
    BinRule rule = BinRule::FreedmanDiaconis;
    double width = 0.0;  // used by FixedWidth
};

struct Histogram {
    double width = 0.0;
    std::vector<double> edges;  // counts.size() + 1 entries
    std::vector<std::size_t> counts;
};

// Linear interpolation between order statistics (h = (n - 1) p).
double quantile(std::vector<double> samples, double p);

// 2 IQR n^(-1/3); needs at least two samples and a non-zero spread.
double freedman_diaconis_width(const std::vector<double>& samples);

// Bins start at the minimum sample; the maximum lands in the last bin.
Histogram make_histogram(const HistogramSpec& spec);

}  // namespace fpcav
