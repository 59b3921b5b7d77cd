#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fpcav/inverse.hpp"
#include "fpcav/numerics.hpp"

namespace fpcav {

BareCavityParams BareCavityParams::from(double t, double alpha, Complex eta, double eps1, double eps2) {
    BareCavityParams p;
    p.t = t;
    p.alpha = alpha;
    p.r = -std::sqrt(std::max(0.0, 1.0 - t * t - alpha));
    p.eta = eta;
    p.eps1 = eps1;
    p.eps2 = eps2;
    p.validate();
    return p;
}

void BareCavityParams::validate() const {
    if (!(t > 0.0 && t < 1.0)) throw InvalidConfigError("t must lie in (0, 1)");
    if (!(alpha >= 0.0)) throw InvalidConfigError("alpha must be non-negative");
    if (std::abs(t * t + r * r + alpha - 1.0) > 1e-9) throw InvalidConfigError("invariant violated: t^2 + r^2 + alpha = 1");
    if (std::abs(eta) > 1.0 + 1e-12) throw InvalidConfigError("|eta| must not exceed 1");
    if (!(eps1 >= 0.0 && eps1 <= 1.0)) throw InvalidConfigError("eps1 must lie in [0, 1]");
    if (!(eps2 >= 0.0 && eps2 <= 1.0)) throw InvalidConfigError("eps2 must lie in [0, 1]");
}

LineshapeCoeffs lineshape_coefficients(const BareCavityParams& p, double wavelength) {
    const double t2 = p.t * p.t, r2 = p.r * p.r;
    const double e1 = p.eps1 * p.eps1, e2 = p.eps2 * p.eps2;
    const double E = std::exp(2.0 * p.alpha);
    const double g2 = (E - r2) * (E - r2);
    const double a = p.eta.real(), b = p.eta.imag();
    const double omega = 2.0 * kPi * kSpeedOfLight / wavelength;
    LineshapeCoeffs c;
    c.y0 = (a * a + b * b) * r2 + a * t2 * e1;
    c.a1 = kPi * t2 * e1 * (a * (r2 * r2 - E * E) + r2 * t2 * e1) / g2;
    c.a2 = 4.0 * kPi * b * E * r2 * t2 * e1 * omega / (kSpeedOfLight * g2);
    c.a3 = kPi * E * t2 * t2 * e1 * e2 / g2;
    c.deltaL = wavelength * (p.alpha + t2) / (2.0 * kPi);
    return c;
}

namespace {

double lorentz(double dL, double fwhm) {
    const double h2 = 0.25 * fwhm * fwhm;
    return h2 / (h2 + dL * dL);
}

}  // namespace

double reflection_lineshape(const LineshapeCoeffs& c, double dL) {
    return (c.a1 + c.a2 * dL) / kPi * lorentz(dL, c.deltaL) + c.y0;
}

double transmission_lineshape(const LineshapeCoeffs& c, double dL) { return c.a3 / kPi * lorentz(dL, c.deltaL); }

SpectralTrace lineshape_forward(const BareCavityParams& p, const std::vector<double>& axis, double wavelength) {
    p.validate();
    const auto c = lineshape_coefficients(p, wavelength);
    SpectralTrace tr;
    tr.axis = ScanAxis::Length;
    tr.x = axis;
    tr.T.reserve(axis.size());
    tr.R.reserve(axis.size());
    for (double x : axis) {
        tr.R.push_back(reflection_lineshape(c, x));
        tr.T.push_back(transmission_lineshape(c, x));
    }
    return tr;
}

namespace {

// Noise from second differences in the outer fifth of each side, where the signal is flat.
double wing_noise(const std::vector<double>& y) {
    const size_t n = y.size();
    const size_t k = std::max<size_t>(3, n / 5);
    double s = 0.0;
    size_t count = 0;
    auto add = [&](size_t i) {
        const double d = y[i + 1] - 2.0 * y[i] + y[i - 1];
        s += d * d;
        ++count;
    };
    for (size_t i = 1; i < k && i + 1 < n; ++i) add(i);
    for (size_t i = n - k; i + 1 < n; ++i)
        if (i >= 1) add(i);
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, std::abs(v));
    const double sigma = count ? std::sqrt(s / (6.0 * count)) : 0.0;
    return std::max(sigma, 1e-12 * std::max(peak, 1e-300));
}

}  // namespace

LineshapeFit fit_lineshapes(const SpectralTrace& trace, const LineshapeFitOptions& options) {
    const size_t n = trace.x.size();
    if (n < 8 || trace.T.size() != n || trace.R.size() != n)
        throw InvalidConfigError("lineshape fit needs matching x, T and R columns with at least 8 samples");
    for (size_t i = 1; i < n; ++i)
        if (!(trace.x[i] > trace.x[i - 1])) throw InvalidConfigError("trace axis must be strictly increasing");

    LineshapeFit fit;
    fit.noise_reflection = wing_noise(trace.R);
    fit.noise_transmission = wing_noise(trace.T);

    // Initial guess from the transmission peak, its half-maximum width and the wing level.
    const size_t ipk = static_cast<size_t>(std::max_element(trace.T.begin(), trace.T.end()) - trace.T.begin());
    const double tmax = trace.T[ipk];
    if (!(tmax > 0.0)) throw FitQualityError("transmission trace has no peak");
    auto crossing = [&](int dir) {
        long i = static_cast<long>(ipk);
        while (i + dir >= 0 && i + dir < static_cast<long>(n) && trace.T[static_cast<size_t>(i)] > 0.5 * tmax) i += dir;
        const size_t a = static_cast<size_t>(i), b = static_cast<size_t>(i - dir);
        const double ya = trace.T[a], yb = trace.T[b];
        if (yb == ya) return trace.x[a];
        return trace.x[a] + (0.5 * tmax - ya) * (trace.x[b] - trace.x[a]) / (yb - ya);
    };
    double width = crossing(+1) - crossing(-1);
    if (!(width > 0.0)) width = 4.0 * (trace.x.back() - trace.x.front()) / static_cast<double>(n);
    const size_t k = std::max<size_t>(2, n / 10);
    double wing = 0.0;
    for (size_t i = 0; i < k; ++i) wing += trace.R[i] + trace.R[n - 1 - i];
    wing /= 2.0 * k;

    Eigen::VectorXd p0(6);
    p0 << wing, kPi * (trace.R[ipk] - wing), 0.0, kPi * tmax, width, trace.x[ipk];

    const double sr = fit.noise_reflection, st = fit.noise_transmission;
    const auto& x = trace.x;
    numerics::LeastSquaresProblem prob;
    prob.n_params = 6;
    prob.n_residuals = static_cast<int>(2 * n);
    prob.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        const LineshapeCoeffs c{p[0], p[1], p[2], p[3], p[4]};
        for (size_t i = 0; i < n; ++i) {
            const double u = x[i] - p[5];
            r[static_cast<long>(i)] = (trace.R[i] - reflection_lineshape(c, u)) / sr;
            r[static_cast<long>(n + i)] = (trace.T[i] - transmission_lineshape(c, u)) / st;
        }
    };
    prob.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& J) {
        const double h = 0.5 * p[4];
        for (size_t i = 0; i < n; ++i) {
            const double u = x[i] - p[5];
            const double d = h * h + u * u;
            const double lz = h * h / d;
            const double dlz_dw = h * u * u / (d * d);  // d/d(fwhm) = 0.5 d/dh
            const double dlz_du = -2.0 * u * h * h / (d * d);
            const double amp = (p[1] + p[2] * u) / kPi;
            const long ir = static_cast<long>(i), it = static_cast<long>(n + i);
            J(ir, 0) = -1.0 / sr;
            J(ir, 1) = -lz / kPi / sr;
            J(ir, 2) = -u * lz / kPi / sr;
            J(ir, 3) = 0.0;
            J(ir, 4) = -amp * dlz_dw / sr;
            J(ir, 5) = (p[2] / kPi * lz + amp * dlz_du) / sr;
            J(it, 0) = 0.0;
            J(it, 1) = 0.0;
            J(it, 2) = 0.0;
            J(it, 3) = -lz / kPi / st;
            J(it, 4) = -p[3] / kPi * dlz_dw / st;
            J(it, 5) = p[3] / kPi * dlz_du / st;
        }
    };

    numerics::LeastSquaresOptions opt;
    opt.max_iterations = options.max_iterations;
    const double a1s = std::max(std::abs(p0[1]), 1e-12);
    opt.scale = {std::max(std::abs(p0[0]), 1e-12), a1s, a1s / width, std::abs(p0[3]), width, width};
    const auto res = numerics::levenberg_marquardt(prob, p0, opt);
    if (!res.converged) throw FitQualityError("lineshape fit did not converge");

    const auto& p = res.params;
    fit.coeffs = {p[0], p[1], p[2], p[3], std::abs(p[4])};
    fit.centre = p[5];
    fit.iterations = res.iterations;
    fit.cost_history = res.cost_history;
    const double dof = static_cast<double>(2 * n - 6);
    fit.chi2_per_dof = 2.0 * res.cost / dof;
    if (!(fit.chi2_per_dof <= options.max_chi2_per_dof)) {
        std::ostringstream msg;
        msg << "lineshape fit quality too low: chi2/dof = " << fit.chi2_per_dof << " exceeds "
            << options.max_chi2_per_dof;
        throw FitQualityError(msg.str());
    }
    const Eigen::MatrixXd JtJ = res.jacobian.transpose() * res.jacobian;
    fit.covariance = JtJ.ldlt().solve(Eigen::MatrixXd::Identity(6, 6)) * std::max(1.0, fit.chi2_per_dof);
    for (int i = 0; i < 6; ++i) fit.std_error[static_cast<size_t>(i)] = std::sqrt(std::max(0.0, fit.covariance(i, i)));
    return fit;
}

double ClosureResiduals::max() const { return *std::max_element(values.begin(), values.end()); }

ClosureResiduals closure_residuals(const BareCavityParams& p, const LineshapeCoeffs& c, double finesse,
                                   double wavelength) {
    const auto m = lineshape_coefficients(p, wavelength);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    ClosureResiduals out;
    out.values[0] = rel(m.y0, c.y0);
    out.values[1] = rel(m.a1, c.a1);
    // a2 enters as a2 * dL; compare its contribution one linewidth from resonance.
    out.values[2] = std::abs(m.a2 - c.a2) * c.deltaL / std::max(std::abs(c.a1), 1e-300);
    out.values[3] = rel(m.a3, c.a3);
    out.values[4] = rel(p.finesse(), finesse);
    out.values[5] = std::abs(p.t * p.t + p.r * p.r + p.alpha - 1.0);
    return out;
}

namespace {

struct ClosureCandidate {
    double t2, alpha, e1s, a, b;
};

}  // namespace

std::vector<BareCavityParams> closure_roots(const LineshapeCoeffs& c, double finesse, double omega) {
    if (!(c.a3 > 0.0)) throw InconsistentDataError("closure: a3 must be positive");
    if (!(finesse > kPi)) throw InconsistentDataError("closure: finesse must exceed pi");
    if (!(omega > 0.0)) throw InvalidConfigError("angular frequency must be positive");

    const double S = kPi / finesse;  // alpha + t^2
    const double r2 = 1.0 - S;
    auto candidate = [&](double t2) {
        ClosureCandidate k;
        k.t2 = t2;
        k.alpha = S - t2;
        const double E = std::exp(2.0 * k.alpha);
        const double g2 = (E - r2) * (E - r2);
        k.e1s = c.a3 * g2 / (kPi * E * t2 * t2);
        k.b = c.a2 * kSpeedOfLight * g2 / (4.0 * kPi * E * r2 * t2 * k.e1s * omega);
        k.a = (c.a1 * g2 / (kPi * t2 * k.e1s) - r2 * t2 * k.e1s) / (r2 * r2 - E * E);
        return k;
    };
    auto residual = [&](double t2) {
        const auto k = candidate(t2);
        return ((k.a * k.a + k.b * k.b) * r2 + k.a * t2 * k.e1s - c.y0) / std::max(std::abs(c.y0), 1e-12);
    };

    // Log-spaced scan of (0, S) for sign changes, each polished by bracketing.
    const int samples = 4000;
    const double lo = std::log(S * 1e-10), hi = std::log(S * (1.0 - 1e-12));
    std::vector<ClosureCandidate> physical;
    std::vector<std::string> failures;
    double x0 = std::exp(lo), f0 = residual(x0);
    for (int i = 1; i <= samples; ++i) {
        const double x1 = std::exp(lo + (hi - lo) * i / samples);
        const double f1 = residual(x1);
        if (std::isfinite(f0) && std::isfinite(f1) && (f0 > 0.0) != (f1 > 0.0)) {
            const double t2 = numerics::find_root(residual, x0, x1, f0, f1, 1e-15);
            const auto k = candidate(t2);
            std::ostringstream why;
            if (!(k.alpha >= 0.0)) why << "alpha < 0";
            else if (!(k.e1s > 0.0 && k.e1s <= 1.0)) why << "eps1^2 = " << k.e1s << " outside (0, 1]";
            else if (k.a * k.a + k.b * k.b > 1.0) why << "|eta| = " << std::hypot(k.a, k.b) << " exceeds 1";
            if (why.str().empty())
                physical.push_back(k);
            else
                failures.push_back("root t^2 = " + std::to_string(t2) + ": " + why.str());
        }
        x0 = x1;
        f0 = f1;
    }
    if (physical.empty()) {
        std::string msg = "closure has no physical root";
        for (const auto& f : failures) msg += "; " + f;
        if (failures.empty()) msg += " (y0 equation never balances on 0 < t^2 < pi/F)";
        throw InconsistentDataError(msg);
    }
    std::vector<BareCavityParams> out;
    for (const auto& k : physical)
        out.push_back(BareCavityParams::from(std::sqrt(k.t2), k.alpha, Complex(k.a, k.b), std::sqrt(k.e1s), 1.0));
    return out;
}

BareCavityParams solve_bare_cavity_params(const LineshapeCoeffs& c, double finesse, double omega) {
    const auto roots = closure_roots(c, finesse, omega);
    if (roots.size() > 1) {
        std::ostringstream msg;
        msg << "closure has " << roots.size() << " physical roots; parameters are not uniquely determined:";
        for (const auto& k : roots)
            msg << " (t^2 = " << k.t * k.t << ", alpha = " << k.alpha << ", eps1 = " << k.eps1 << ", eta = "
                << k.eta.real() << (k.eta.imag() < 0 ? "-" : "+") << std::abs(k.eta.imag()) << "i)";
        throw InconsistentDataError(msg.str());
    }
    return roots.front();
}

namespace {

void add_noise(std::vector<double>& y, const TraceNoise& noise, std::mt19937_64& rng) {
    if (noise.relative <= 0.0) return;
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, std::abs(v));
    const double sigma = noise.relative * peak / std::sqrt(static_cast<double>(std::max(1, noise.averages)));
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& v : y) v += gauss(rng);
}

}  // namespace

SpectralTrace synthesize_trace(const BareCavityParams& truth, const std::vector<double>& axis, double wavelength,
                               const TraceNoise& noise) {
    if (noise.relative < 0.0) throw InvalidConfigError("noise must be non-negative");
    auto tr = lineshape_forward(truth, axis, wavelength);
    std::mt19937_64 rng(noise.seed);
    add_noise(tr.R, noise, rng);
    add_noise(tr.T, noise, rng);
    return tr;
}

SpectralTrace synthesize_trace(const CavityConfig& truth, double frequency, const std::vector<double>& axis,
                               const TraceNoise& noise) {
    if (noise.relative < 0.0) throw InvalidConfigError("noise must be non-negative");
    truth.validate();
    SpectralTrace tr;
    tr.axis = ScanAxis::Length;
    tr.x = axis;
    const auto mode = resolve_mode(truth, wavelength_of(frequency));
    for (double L : axis) {
        const auto pr = response(truth, mode, L, frequency);
        tr.T.push_back(pr.T);
        tr.R.push_back(pr.R);
    }
    std::mt19937_64 rng(noise.seed);
    add_noise(tr.R, noise, rng);
    add_noise(tr.T, noise, rng);
    return tr;
}

}  // namespace fpcav
