#include <exception>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "fpcav/core.hpp"
#include "output.hpp"

using namespace fpcav::cli;

namespace {

void add_common(CLI::App* sub, CommonOptions& c) {
    sub->add_option("--config", c.config, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--preset", c.preset, "Named configuration: membrane, lossy-membrane, projected, bare");
    sub->add_option("--out", c.out, "Output path ('-' for stdout)");
    sub->add_option("--jobs", c.jobs, "Worker threads (output does not depend on it)");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--points", c.points, "Sweep points");
    sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fabry-Perot cavity with a diamond membrane: sweeps, fits and synthetic data"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    CommonOptions common;
    std::function<int()> action;

    auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        add_common(s, common);
        return s;
    };

    SpectrumMapOptions smo;
    auto* sm = sub("spectrum-map", "Transmission map over cavity length and frequency");
    sm->add_option("--bins", smo.bins, "Frequency bins");
    sm->callback([&] { action = [&] { return run_spectrum_map(common, smo); }; });

    FinesseWavelengthOptions fwo;
    auto* fw = sub("finesse-wavelength", "Finesse along the resonance branch versus wavelength");
    fw->add_option("--loss", fwo.loss,
                   "Loss model: lossless, mirror-absorption, air-diamond-roughness, diamond-mirror-roughness, "
                   "diamond-absorption, lossy-membrane");
    fw->callback([&] { action = [&] { return run_finesse_wavelength(common, fwo); }; });

    FinesseLengthOptions flo;
    auto* fl = sub("finesse-length", "Finesse of each length-scan resonance at fixed wavelength");
    fl->add_option("--wavelength", flo.wavelength, "Wavelength with unit, e.g. 637nm");
    fl->callback([&] { action = [&] { return run_finesse_length(common, flo); }; });

    PurcellOptions po;
    auto* pu = sub("purcell", "Purcell factor, Q, mode volume and linewidth along the branch");
    pu->callback([&] { action = [&] { return run_purcell(common, po); }; });

    RootsOptions ro;
    auto* rt = sub("roots", "Perfect-mirror resonances and their large-m approximation");
    rt->callback([&] { action = [&] { return run_roots(common, ro); }; });

    LadderOptions lo;
    auto* ld = sub("ladder", "Perfect-mirror resonances versus cavity length");
    ld->callback([&] { action = [&] { return run_ladder(common, lo); }; });

    FitTracesOptions fto;
    auto* ft = sub("fit-traces", "Fit reflection/transmission traces and solve for mirror parameters");
    ft->add_option("--input", fto.input, "CSV with detuning, reflection, transmission")->required();
    ft->add_option("--wavelength", fto.wavelength, "Wavelength with unit");
    ft->callback([&] { action = [&] { return run_fit_traces(common, fto); }; });

    FitLadderOptions flao;
    auto* fla = sub("fit-ladder", "Fit membrane thickness and piezo polynomial to a resonance ladder");
    fla->add_option("--input", flao.input, "CSV with control, frequency")->required();
    fla->add_option("--membrane-index", flao.membrane_index, "Membrane refractive index");
    fla->callback([&] { action = [&] { return run_fit_ladder(common, flao); }; });

    ClippingOptions co;
    auto* cs = sub("clipping-sweep", "Finesse versus length with transverse mixing and aperture clipping");
    cs->add_option("--radius", co.radii, "Aperture radius with unit (repeatable)");
    cs->add_option("--radius-factor", co.factors, "Aperture radius in fiber-mirror beam radii (repeatable)");
    cs->add_option("--wavelength", co.wavelength, "Wavelength with unit");
    cs->add_flag("--clipping-only", co.clipping_only, "Leave mirror transmission out of the finesse");
    cs->callback([&] { action = [&] { return run_clipping_sweep(common, co); }; });

    SynthOptions syo;
    auto* sy = sub("synth", "Synthetic data: lineshape traces, resonance ladders or normal samples");
    sy->add_option("--kind", syo.kind, "lineshape, ladder or normal")
        ->check(CLI::IsMember({"lineshape", "ladder", "normal"}));
    sy->add_option("--noise", syo.noise, "Lineshape noise (fraction of peak) or normal standard deviation");
    sy->add_option("--averages", syo.averages, "Averaged traces");
    sy->add_option("--count", syo.count, "Normal samples");
    sy->add_option("--scans", syo.scans, "Ladder scans");
    sy->add_option("--frequency-noise", syo.noise_frequency, "Ladder frequency noise with unit, e.g. 50GHz");
    sy->callback([&] { action = [&] { return run_synth(common, syo); }; });

    HistogramOptions ho;
    auto* hi = sub("histogram", "Histogram of one CSV column");
    hi->add_option("--input", ho.input, "Input CSV")->required();
    hi->add_option("--column", ho.column, "Column name (default: first)");
    hi->add_option("--rule", ho.rule, "freedman-diaconis or fixed-width")
        ->check(CLI::IsMember({"freedman-diaconis", "fixed-width"}));
    hi->add_option("--width", ho.width, "Bin width for fixed-width");
    hi->callback([&] { action = [&] { return run_histogram(common, ho); }; });

    auto* cr = app.add_subcommand("config-reference", "Print every configuration key with unit and default");
    cr->add_option("--out", common.out, "Output path ('-' for stdout)");
    cr->callback([&] { action = [&] { return run_config_reference(common); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return action ? action() : 1;
    } catch (const fpcav::Error& e) {
        std::cerr << "fpcav: error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fpcav: unexpected failure: " << e.what() << "\n";
        return 3;
    }
}
