#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpcav/config.hpp"

namespace fpcav::cli {

struct CommonOptions {
    std::string config;
    std::string preset;
    std::string out = "-";
    std::string format = "csv";
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<int> points;
};

// Config file or preset (not both), then flag overrides.
RunConfig resolve_config(const CommonOptions& common);

struct SpectrumMapOptions {
    int bins = 600;
};
struct FinesseWavelengthOptions {
    std::string loss;
};
struct FinesseLengthOptions {
    std::string wavelength;
};
struct PurcellOptions {};
struct RootsOptions {};
struct LadderOptions {};
struct FitTracesOptions {
    std::string input;
    std::string wavelength;
};
struct FitLadderOptions {
    std::string input;
    std::string membrane_index = "2.417";
};
struct ClippingOptions {
    std::vector<std::string> radii;
    std::vector<double> factors{2.5, 3.0, 3.5};
    std::string wavelength;
    bool clipping_only = false;
};
struct SynthOptions {
    std::string kind = "lineshape";
    double noise = 0.0;  // lineshape: fraction of peak, normal: standard deviation
    int averages = 1;
    int count = 1000;
    int scans = 40;
    std::string noise_frequency = "0Hz";
};
struct HistogramOptions {
    std::string input;
    std::string column;
    std::string rule = "freedman-diaconis";
    double width = 0.0;
};

int run_spectrum_map(const CommonOptions&, const SpectrumMapOptions&);
int run_finesse_wavelength(const CommonOptions&, const FinesseWavelengthOptions&);
int run_finesse_length(const CommonOptions&, const FinesseLengthOptions&);
int run_purcell(const CommonOptions&, const PurcellOptions&);
int run_roots(const CommonOptions&, const RootsOptions&);
int run_ladder(const CommonOptions&, const LadderOptions&);
int run_fit_traces(const CommonOptions&, const FitTracesOptions&);
int run_fit_ladder(const CommonOptions&, const FitLadderOptions&);
int run_clipping_sweep(const CommonOptions&, const ClippingOptions&);
int run_synth(const CommonOptions&, const SynthOptions&);
int run_histogram(const CommonOptions&, const HistogramOptions&);
int run_config_reference(const CommonOptions&);

}  // namespace fpcav::cli
