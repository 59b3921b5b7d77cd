#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>

#include <fmt/core.h>

#include "fpcav/analytic_1d.hpp"
#include "fpcav/gaussian_modes.hpp"
#include "fpcav/histogram.hpp"
#include "fpcav/inverse.hpp"
#include "fpcav/perturbation.hpp"
#include "fpcav/purcell.hpp"
#include "fpcav/units.hpp"
#include "output.hpp"

namespace fpcav::cli {

namespace {

std::string emit(const CommonOptions& common, const CsvTable& table) {
    if (common.format != "csv") throw InvalidConfigError("unsupported --format '" + common.format + "'");
    write_output(common.out, write_csv(table));
    return common.out;
}

// Human-readable report goes to stdout unless the table itself does.
std::ostream& report_stream(const CommonOptions& common) {
    return common.out.empty() || common.out == "-" ? std::cerr : std::cout;
}

Membrane1DParams membrane_params(const CavityConfig& c) {
    Membrane1DParams p;
    p.length = c.length;
    p.membrane_thickness = c.membrane_thickness;
    p.membrane_index = c.membrane.real();
    return p;
}

double quantity_or(const std::string& text, Dimension dim, double fallback) {
    return text.empty() ? fallback : parse_quantity(text, dim);
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    return v;
}

// Maximum of a sampled curve and its full width at half maximum by linear interpolation.
struct CurvePeak {
    double x = 0.0, y = 0.0, fwhm = std::numeric_limits<double>::quiet_NaN();
};

CurvePeak sampled_peak(const std::vector<double>& x, const std::vector<double>& y) {
    CurvePeak p;
    if (x.empty()) return p;
    const size_t i = static_cast<size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    p.x = x[i];
    p.y = y[i];
    const double half = 0.5 * p.y;
    size_t l = i, r = i;
    while (l > 0 && y[l] >= half) --l;
    while (r + 1 < y.size() && y[r] >= half) ++r;
    if (y[l] >= half || y[r] >= half) return p;
    auto cross = [&](size_t a, size_t b) { return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]); };
    p.fwhm = cross(r - 1, r) - cross(l, l + 1);
    return p;
}

}  // namespace

RunConfig resolve_config(const CommonOptions& common) {
    if (!common.config.empty() && !common.preset.empty())
        throw InvalidConfigError("--config and --preset are mutually exclusive");
    RunConfig rc = !common.config.empty() ? load_config(common.config)
                                          : preset_config(common.preset.empty() ? "membrane" : common.preset);
    if (common.jobs) {
        if (*common.jobs < 1) throw InvalidConfigError("--jobs must be at least 1");
        rc.jobs = *common.jobs;
    }
    if (common.seed) rc.seed = *common.seed;
    if (common.points) {
        if (*common.points < 2) throw InvalidConfigError("--points must be at least 2");
        rc.points = *common.points;
    }
    return rc;
}

int run_spectrum_map(const CommonOptions& common, const SpectrumMapOptions& opt) {
    const RunConfig rc = resolve_config(common);
    if (opt.bins < 1) throw InvalidConfigError("--bins must be at least 1");
    const auto& w = rc.window;
    const auto map = spectrum_map(rc.cavity, w.length_lo, w.length_hi, rc.points, w.frequency_lo, w.frequency_hi,
                                  opt.bins, rc.jobs);
    CsvTable t = make_table("spectrum-map", rc, {"length", "frequency", "transmission"}, {"m", "Hz", "1"});
    t.add_meta("bin_width", format_number(map.bin_width));
    for (size_t i = 0; i < map.lengths.size(); ++i)
        for (size_t j = 0; j < map.frequencies.size(); ++j)
            add_row(t, {map.lengths[i], map.frequencies[j], map.transmission[i * map.frequencies.size() + j]});
    emit(common, t);
    return 0;
}

int run_finesse_wavelength(const CommonOptions& common, const FinesseWavelengthOptions& opt) {
    RunConfig rc = resolve_config(common);
    if (!opt.loss.empty()) rc.set_loss(opt.loss);
    const auto curve =
        finesse_vs_wavelength(rc.cavity, rc.window.wavelength_lo, rc.window.wavelength_hi, rc.points, rc.jobs);
    CsvTable t = make_table("finesse-wavelength", rc,
                            {"wavelength", "length", "finesse", "fwhm", "fsr", "character", "peak_transmission",
                             "interface_intensity"},
                            {"m", "m", "1", "m", "m", "1", "1", "1"});
    std::vector<double> x, y;
    for (const auto& p : curve) {
        add_row(t, {p.wavelength, p.length, p.finesse, p.fwhm, p.fsr, p.character, p.peak_transmission,
                    p.interface_intensity});
        x.push_back(p.wavelength);
        y.push_back(p.finesse);
    }
    const CurvePeak peak = sampled_peak(x, y);
    t.add_meta("loss", rc.loss);
    t.add_meta("peak_wavelength", format_number(peak.x));
    t.add_meta("peak_finesse", format_number(peak.y));
    t.add_meta("peak_fwhm", format_number(peak.fwhm));
    emit(common, t);
    return 0;
}

int run_finesse_length(const CommonOptions& common, const FinesseLengthOptions& opt) {
    const RunConfig rc = resolve_config(common);
    const double lambda = quantity_or(opt.wavelength, Dimension::Length, rc.wavelength);
    const auto curve =
        finesse_vs_length(rc.cavity, lambda, rc.window.length_lo, rc.window.length_hi, rc.points, rc.jobs);
    CsvTable t = make_table("finesse-length", rc,
                            {"length", "wavelength", "finesse", "fwhm", "fsr", "character", "peak_transmission"},
                            {"m", "m", "1", "m", "m", "1", "1"});
    for (const auto& p : curve)
        add_row(t, {p.length, p.wavelength, p.finesse, p.fwhm, p.fsr, p.character, p.peak_transmission});
    emit(common, t);
    return 0;
}

int run_purcell(const CommonOptions& common, const PurcellOptions&) {
    const RunConfig rc = resolve_config(common);
    const auto branch = purcell_branch(rc.cavity, rc.window.wavelength_lo, rc.window.wavelength_hi, rc.points, rc.jobs);
    CsvTable t = make_table("purcell", rc,
                            {"wavelength", "length", "finesse", "purcell_factor", "quality_factor", "mode_volume",
                             "linewidth", "character", "mode_type"},
                            {"m", "m", "1", "1", "1", "m^3", "Hz", "1", "-"});
    double best = 0.0;
    for (const auto& p : branch) {
        const auto& r = p.purcell;
        std::vector<std::string> row;
        for (double v : {p.wavelength, p.length, p.finesse_length, r.purcell_factor, r.quality_factor, r.mode_volume,
                         r.linewidth, r.character})
            row.push_back(format_number(v));
        row.emplace_back(to_string(r.mode_type));
        t.rows.push_back(std::move(row));
        best = std::max(best, r.purcell_factor);
    }
    t.add_meta("max_purcell_factor", format_number(best));
    emit(common, t);
    return 0;
}

int run_roots(const CommonOptions& common, const RootsOptions&) {
    const RunConfig rc = resolve_config(common);
    const Membrane1DParams p = membrane_params(rc.cavity);
    p.validate();
    const auto roots = exact_resonances(p, rc.window.frequency_lo, rc.window.frequency_hi);
    const double fsr = kSpeedOfLight / (2.0 * p.optical_length());
    CsvTable t = make_table("roots", rc, {"m", "frequency", "approx_frequency", "deviation"}, {"1", "Hz", "Hz", "fsr"});
    t.add_meta("spacing_average", format_number(fsr));
    if (p.membrane_thickness > 0.0) {
        const auto lad = uncoupled_ladders(p);
        t.add_meta("spacing_diamond", format_number(lad.diamond));
        t.add_meta("spacing_air", format_number(lad.air));
    }
    for (double nu : roots) {
        Membrane1DParams q = p;
        q.m = nearest_approx_index(p, nu);
        const double approx = approx_resonance(q);
        add_row(t, {static_cast<double>(q.m), nu, approx, (approx - nu) / fsr});
    }
    emit(common, t);
    return 0;
}

int run_ladder(const CommonOptions& common, const LadderOptions&) {
    const RunConfig rc = resolve_config(common);
    CsvTable t = make_table("ladder", rc, {"length", "frequency", "m"}, {"m", "Hz", "1"});
    for (double L : linspace(rc.window.length_lo, rc.window.length_hi, rc.points)) {
        Membrane1DParams p = membrane_params(rc.cavity);
        p.length = L;
        p.validate();
        for (double nu : exact_resonances(p, rc.window.frequency_lo, rc.window.frequency_hi))
            add_row(t, {L, nu, static_cast<double>(nearest_approx_index(p, nu))});
    }
    emit(common, t);
    return 0;
}

namespace {

constexpr int kDerived = 7;  // t, T, alpha, finesse, eta_re, eta_im, eps1
const char* const kDerivedNames[kDerived] = {"t", "T", "alpha", "finesse", "eta_re", "eta_im", "eps1"};

std::array<double, kDerived> derived_params(const LineshapeCoeffs& c, double lambda) {
    const double finesse = lambda / (2.0 * c.deltaL);
    const auto q = solve_bare_cavity_params(c, finesse, 2.0 * kPi * frequency_of(lambda));
    return {q.t, q.t * q.t, q.alpha, q.finesse(), q.eta.real(), q.eta.imag(), q.eps1};
}

LineshapeCoeffs shifted(LineshapeCoeffs c, int k, double h) {
    double* f[5] = {&c.y0, &c.a1, &c.a2, &c.a3, &c.deltaL};
    *f[k] += h;
    return c;
}

}  // namespace

int run_fit_traces(const CommonOptions& common, const FitTracesOptions& opt) {
    const RunConfig rc = resolve_config(common);
    if (opt.input.empty()) throw InvalidConfigError("--input is required");
    const double lambda = quantity_or(opt.wavelength, Dimension::Length, rc.wavelength);
    const CsvTable in = read_csv_file(opt.input);
    SpectralTrace tr;
    tr.x = in.numeric_column("detuning");
    tr.R = in.numeric_column("reflection");
    tr.T = in.numeric_column("transmission");
    const LineshapeFit fit = fit_lineshapes(tr);
    const auto value = derived_params(fit.coeffs, lambda);

    // Linear propagation of the coefficient covariance through the closure.
    Eigen::Matrix<double, kDerived, 5> J = Eigen::Matrix<double, kDerived, 5>::Zero();
    for (int k = 0; k < 5; ++k) {
        const double h = 1e-3 * fit.std_error[static_cast<size_t>(k)];
        if (!(h > 0.0)) continue;
        const auto up = derived_params(shifted(fit.coeffs, k, h), lambda);
        const auto dn = derived_params(shifted(fit.coeffs, k, -h), lambda);
        for (int i = 0; i < kDerived; ++i) J(i, k) = (up[static_cast<size_t>(i)] - dn[static_cast<size_t>(i)]) / (2 * h);
    }
    const Eigen::MatrixXd cov = J * fit.covariance.topLeftCorner(5, 5) * J.transpose();

    CsvTable t = make_table("fit-traces", rc, {"parameter", "value", "std_error"}, {"-", "-", "-"});
    t.add_meta("input", opt.input);
    t.add_meta("wavelength", format_number(lambda));
    t.add_meta("chi2_per_dof", format_number(fit.chi2_per_dof));
    const char* coeff_names[6] = {"y0", "a1", "a2", "a3", "deltaL", "centre"};
    const double coeff_values[6] = {fit.coeffs.y0, fit.coeffs.a1, fit.coeffs.a2, fit.coeffs.a3, fit.coeffs.deltaL,
                                    fit.centre};
    std::ostream& rep = report_stream(common);
    for (int k = 0; k < 6; ++k) {
        const double e = fit.std_error[static_cast<size_t>(k)];
        t.rows.push_back({coeff_names[k], format_number(coeff_values[k]), format_number(e)});
        rep << fmt::format("{} = {:.6g} ± {:.2g}\n", coeff_names[k], coeff_values[k], e);
    }
    for (int i = 0; i < kDerived; ++i) {
        const double e = std::sqrt(std::max(0.0, cov(i, i)));
        t.rows.push_back({kDerivedNames[i], format_number(value[static_cast<size_t>(i)]), format_number(e)});
        rep << fmt::format("{} = {:.6g} ± {:.2g}\n", kDerivedNames[i], value[static_cast<size_t>(i)], e);
    }
    emit(common, t);
    return 0;
}

int run_fit_ladder(const CommonOptions& common, const FitLadderOptions& opt) {
    const RunConfig rc = resolve_config(common);
    if (opt.input.empty()) throw InvalidConfigError("--input is required");
    const CsvTable in = read_csv_file(opt.input);
    const auto control = in.numeric_column("control");
    const auto freq = in.numeric_column("frequency");
    std::vector<LadderObservation> obs;
    for (size_t i = 0; i < control.size(); ++i) obs.push_back({control[i], freq[i]});
    LadderFitOptions fo;
    fo.membrane_index = parse_quantity(opt.membrane_index, Dimension::Dimensionless);
    const auto fit = fit_resonance_ladder(obs, fo);

    CsvTable t = make_table("fit-ladder", rc, {"control", "length"}, {"1", "m"});
    t.add_meta("input", opt.input);
    t.add_meta("membrane_thickness", format_number(fit.model.membrane_thickness));
    t.add_meta("membrane_thickness_error", format_number(fit.thickness_error));
    for (size_t k = 0; k < 4; ++k) {
        t.add_meta("c" + std::to_string(k), format_number(fit.model.piezo[k]));
        t.add_meta("c" + std::to_string(k) + "_error", format_number(fit.piezo_error[k]));
    }
    t.add_meta("residual_rms", format_number(fit.residual_rms));
    t.add_meta("branches", std::to_string(fit.branches));
    if (!fit.warning.empty()) t.add_meta("warning", fit.warning);
    for (size_t i = 0; i < fit.controls.size(); ++i) add_row(t, {fit.controls[i], fit.lengths[i]});

    std::ostream& rep = report_stream(common);
    rep << fmt::format("membrane_thickness = {:.6g} ± {:.2g} m\n", fit.model.membrane_thickness, fit.thickness_error);
    for (size_t k = 0; k < 4; ++k)
        rep << fmt::format("c{} = {:.6g} ± {:.2g} m\n", k, fit.model.piezo[k], fit.piezo_error[k]);
    rep << fmt::format("residual_rms = {:.3g} Hz\n", fit.residual_rms);
    if (!fit.warning.empty()) rep << "warning: " << fit.warning << "\n";
    emit(common, t);
    return 0;
}

int run_clipping_sweep(const CommonOptions& common, const ClippingOptions& opt) {
    const RunConfig rc = resolve_config(common);
    const CavityConfig& c = rc.cavity;
    ClippingSweepOptions so;
    so.wavelength = quantity_or(opt.wavelength, Dimension::Length, rc.wavelength);
    so.include_mirror_transmission = !opt.clipping_only;
    std::vector<double> radii;
    if (!opt.radii.empty()) {
        for (const auto& r : opt.radii) radii.push_back(parse_quantity(r, Dimension::Length));
    } else {
        const auto mode = match_membrane_cavity_mode(c.fiber_roc, c.length, c.membrane_thickness, c.membrane.real(),
                                                     so.wavelength);
        for (double f : opt.factors) radii.push_back(f * mode.fiber_mirror_radius());
    }
    for (double r : radii)
        if (!(r > 0.0)) throw InvalidConfigError("aperture radii must be positive");
    const auto sweep =
        finesse_vs_length_with_clipping(c, rc.window.length_lo, rc.window.length_hi, radii, so, rc.jobs);

    std::vector<std::string> cols{"length", "valid", "mirror_beam_radius", "correction_norm", "nearest_gap"};
    std::vector<std::string> units{"m", "1", "m", "1", "1"};
    for (size_t k = 0; k < radii.size(); ++k) {
        cols.push_back("finesse_" + std::to_string(k));
        units.emplace_back("1");
    }
    for (size_t k = 0; k < radii.size(); ++k) {
        cols.push_back("loss_" + std::to_string(k));
        units.emplace_back("1");
    }
    CsvTable t = make_table("clipping-sweep", rc, cols, units);
    std::string listed;
    for (size_t k = 0; k < radii.size(); ++k) listed += (k ? ";" : "") + format_number(radii[k]);
    t.add_meta("aperture_radii", listed);
    t.add_meta("mirror_transmission", so.include_mirror_transmission ? "included" : "excluded");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : sweep) {
        std::vector<double> row{p.length, p.valid ? 1.0 : 0.0, p.mirror_beam_radius, p.correction_norm, p.nearest_gap};
        for (size_t k = 0; k < radii.size(); ++k) row.push_back(p.valid ? p.finesse[k] : nan);
        for (size_t k = 0; k < radii.size(); ++k) row.push_back(p.valid ? p.loss[k] : nan);
        add_row(t, row);
    }
    emit(common, t);
    return 0;
}

int run_synth(const CommonOptions& common, const SynthOptions& opt) {
    const RunConfig rc = resolve_config(common);
    if (opt.kind == "lineshape") {
        const auto truth = BareCavityParams::from(std::sqrt(78e-6), 8e-6, Complex(0.61, 0.14), 0.69);
        const auto coeffs = lineshape_coefficients(truth, rc.wavelength);
        const int n = std::max(rc.points, 801);
        std::vector<double> axis;
        for (int i = 0; i < n; ++i) axis.push_back(coeffs.deltaL * (-20.0 + 40.0 * i / (n - 1)));
        if (opt.noise < 0.0 || opt.averages < 1) throw InvalidConfigError("noise must be >= 0 and averages >= 1");
        const auto tr = synthesize_trace(truth, axis, rc.wavelength, {opt.noise, opt.averages, rc.seed});
        CsvTable t = make_table("synth", rc, {"detuning", "reflection", "transmission"}, {"m", "1", "1"});
        t.add_meta("kind", "lineshape");
        t.add_meta("wavelength", format_number(rc.wavelength));
        t.add_meta("true_t", format_number(truth.t));
        t.add_meta("true_alpha", format_number(truth.alpha));
        t.add_meta("true_eta", format_number(truth.eta.real()) + ";" + format_number(truth.eta.imag()));
        t.add_meta("true_eps1", format_number(truth.eps1));
        t.add_meta("noise", format_number(opt.noise));
        t.add_meta("averages", std::to_string(opt.averages));
        for (size_t i = 0; i < tr.x.size(); ++i) add_row(t, {tr.x[i], tr.R[i], tr.T[i]});
        emit(common, t);
        return 0;
    }
    if (opt.kind == "ladder") {
        LadderModel truth;
        truth.membrane_index = rc.cavity.membrane.real();
        truth.membrane_thickness = rc.cavity.membrane_thickness;
        truth.piezo = {15e-6, 12e-6, 1.5e-6, -0.8e-6};
        LadderSynthOptions so;
        so.scans = opt.scans;
        so.frequency_lo = rc.window.frequency_lo;
        so.frequency_hi = rc.window.frequency_hi;
        so.noise_hz = parse_quantity(opt.noise_frequency, Dimension::Frequency);
        so.seed = rc.seed;
        const auto obs = synthesize_ladder(truth, so);
        CsvTable t = make_table("synth", rc, {"control", "frequency"}, {"1", "Hz"});
        t.add_meta("kind", "ladder");
        t.add_meta("true_membrane_thickness", format_number(truth.membrane_thickness));
        for (size_t k = 0; k < 4; ++k) t.add_meta("true_c" + std::to_string(k), format_number(truth.piezo[k]));
        t.add_meta("noise", format_number(so.noise_hz));
        for (const auto& o : obs) add_row(t, {o.control, o.frequency});
        emit(common, t);
        return 0;
    }
    if (opt.kind == "normal") {
        if (opt.count < 1) throw InvalidConfigError("--count must be at least 1");
        std::mt19937_64 rng(rc.seed);
        std::normal_distribution<double> dist(0.0, opt.noise > 0.0 ? opt.noise : 1.0);
        CsvTable t = make_table("synth", rc, {"value"}, {"1"});
        t.add_meta("kind", "normal");
        for (int i = 0; i < opt.count; ++i) add_row(t, {dist(rng)});
        emit(common, t);
        return 0;
    }
    throw InvalidConfigError("unknown synth kind '" + opt.kind + "' (lineshape, ladder, normal)");
}

int run_histogram(const CommonOptions& common, const HistogramOptions& opt) {
    const RunConfig rc = resolve_config(common);
    if (opt.input.empty()) throw InvalidConfigError("--input is required");
    const CsvTable in = read_csv_file(opt.input);
    if (in.columns.empty()) throw InvalidConfigError(opt.input + ": no columns");
    const std::string column = opt.column.empty() ? in.columns.front() : opt.column;
    HistogramSpec spec;
    spec.samples = in.numeric_column(column);
    spec.rule = parse_bin_rule(opt.rule);
    spec.width = opt.width;
    const Histogram h = make_histogram(spec);
    const size_t ci = in.column(column);
    const std::string unit = ci < in.units.size() ? in.units[ci] : "1";
    CsvTable t = make_table("histogram", rc, {"bin_lo", "bin_hi", "count"}, {unit, unit, "1"});
    t.add_meta("input", opt.input);
    t.add_meta("column", column);
    t.add_meta("rule", opt.rule);
    t.add_meta("bin_width", format_number(h.width));
    t.add_meta("samples", std::to_string(spec.samples.size()));
    for (size_t i = 0; i < h.counts.size(); ++i)
        add_row(t, {h.edges[i], h.edges[i + 1], static_cast<double>(h.counts[i])});
    emit(common, t);
    return 0;
}

int run_config_reference(const CommonOptions& common) {
    write_output(common.out, config_reference());
    return 0;
}

}  // namespace fpcav::cli
