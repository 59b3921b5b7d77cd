#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "fpcav/presets.hpp"
#include "fpcav/transfer_matrix.hpp"

namespace fpcav {

// Fully validated run configuration. Every physical value is stored in SI.
struct RunConfig {
    CavityConfig geometry = reference_cavity();  // before the loss model
    LossParameters losses;
    CavityConfig cavity = reference_cavity();  // geometry with losses applied
    std::string preset = "membrane";
    std::string loss = "lossless";
    ScanWindow window = reference_window();
    double wavelength = 637e-9;
    int points = 201;
    int jobs = 1;
    std::uint64_t seed = 0;

    // Replaces the loss model (a LossPreset name) and re-resolves `cavity`.
    void set_loss(std::string_view name);

    // Stable key = value listing of every resolved value (floats at full precision).
    std::string canonical() const;
    std::uint64_t hash() const;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

// INI-style text:
//   [cavity] [coating] [flat_mirror] [fiber_mirror] [scan] [run]
//   key = value  with explicit units on lengths and frequencies, '#' comments.
// Errors name the source and line: "<source>:<line>: <message>".
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
RunConfig preset_config(std::string_view preset);

// Markdown table of every section and key with its unit, default and meaning.
std::string config_reference();

}  // namespace fpcav
