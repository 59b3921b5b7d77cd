#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fpcav/inverse.hpp"
#include "fpcav/numerics.hpp"

namespace fpcav {

double LadderModel::length(double v) const { return piezo[0] + v * (piezo[1] + v * (piezo[2] + v * piezo[3])); }

namespace {

// Large-m resonance approximation for mode m.
double ladder_frequency(double L, double t, double n, int m) {
    const double Lopt = L + (n - 1.0) * t;
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const double arg = (n - 1.0) / (n + 1.0) * std::sin(m * kPi * (L - (n + 1.0) * t) / Lopt);
    return kSpeedOfLight / (2.0 * kPi * Lopt) * (kPi * m - sign * std::asin(arg));
}

// Mode number whose resonance lies nearest nu; the correction term is under half an FSR.
int nearest_mode(double L, double t, double n, double nu) {
    const double Lopt = L + (n - 1.0) * t;
    const int guess = static_cast<int>(std::lround(2.0 * Lopt * nu / kSpeedOfLight));
    int best = guess;
    double bd = std::numeric_limits<double>::infinity();
    for (int m = std::max(1, guess - 1); m <= guess + 1; ++m) {
        const double d = std::abs(ladder_frequency(L, t, n, m) - nu);
        if (d < bd) {
            bd = d;
            best = m;
        }
    }
    return best;
}

}  // namespace

std::vector<LadderObservation> synthesize_ladder(const LadderModel& truth, const LadderSynthOptions& o) {
    if (o.scans < 1) throw InvalidConfigError("ladder synthesis needs at least one scan");
    if (!(o.frequency_hi > o.frequency_lo && o.frequency_lo > 0.0)) throw InvalidConfigError("bad frequency window");
    if (o.noise_hz < 0.0) throw InvalidConfigError("noise must be non-negative");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double n = truth.membrane_index, t = truth.membrane_thickness;
    std::vector<LadderObservation> out;
    for (int j = 0; j < o.scans; ++j) {
        const double v = o.scans == 1 ? o.control_lo : o.control_lo + (o.control_hi - o.control_lo) * j / (o.scans - 1);
        const double L = truth.length(v);
        if (!(L > t)) throw InvalidConfigError("piezo model gives L <= t_d");
        const double Lopt = L + (n - 1.0) * t;
        const int m_lo = std::max(1, static_cast<int>(std::floor(2.0 * Lopt * o.frequency_lo / kSpeedOfLight)) - 2);
        const int m_hi = static_cast<int>(std::ceil(2.0 * Lopt * o.frequency_hi / kSpeedOfLight)) + 2;
        for (int m = m_lo; m <= m_hi; ++m) {
            const double nu = ladder_frequency(L, t, n, m);
            if (nu < o.frequency_lo || nu > o.frequency_hi) continue;
            out.push_back({v, nu + (o.noise_hz > 0.0 ? o.noise_hz * gauss(rng) : 0.0)});
        }
    }
    return out;
}

namespace {

struct Scan {
    double u;
    std::vector<size_t> obs;
};

// Cubic least squares y(u).
std::array<double, 4> cubic_fit(const std::vector<double>& u, const std::vector<double>& y) {
    const int deg = std::min<int>(3, static_cast<int>(u.size()) - 1);
    Eigen::MatrixXd A(static_cast<long>(u.size()), 4);
    A.setZero();
    Eigen::VectorXd b(static_cast<long>(u.size()));
    for (size_t i = 0; i < u.size(); ++i) {
        double p = 1.0;
        for (int k = 0; k <= deg; ++k, p *= u[i]) A(static_cast<long>(i), k) = p;
        b[static_cast<long>(i)] = y[i];
    }
    Eigen::VectorXd c = A.leftCols(deg + 1).colPivHouseholderQr().solve(b);
    std::array<double, 4> out{};
    for (int k = 0; k <= deg; ++k) out[static_cast<size_t>(k)] = c[k];
    return out;
}

}  // namespace

ResonanceLadderFit fit_resonance_ladder(const std::vector<LadderObservation>& observed, const LadderFitOptions& options) {
    const double n = options.membrane_index;
    if (observed.size() < 6) throw InvalidConfigError("ladder fit needs at least 6 resonances");

    // Group by control value and normalise the control axis to [-1, 1].
    std::map<double, std::vector<size_t>> groups;
    for (size_t i = 0; i < observed.size(); ++i) groups[observed[i].control].push_back(i);
    const double vlo = groups.begin()->first, vhi = groups.rbegin()->first;
    const double vm = 0.5 * (vlo + vhi);
    const double vh = vhi > vlo ? 0.5 * (vhi - vlo) : 1.0;
    std::vector<Scan> scans;
    for (auto& [v, idx] : groups) scans.push_back({(v - vm) / vh, idx});
    std::vector<double> u_obs(observed.size());
    for (const auto& s : scans)
        for (size_t i : s.obs) u_obs[i] = s.u;

    // Optical length per scan from the mean resonance spacing.
    std::vector<double> us, lopt;
    for (const auto& s : scans) {
        if (s.obs.size() < 2) continue;
        std::vector<double> f;
        for (size_t i : s.obs) f.push_back(observed[i].frequency);
        std::sort(f.begin(), f.end());
        const double spacing = (f.back() - f.front()) / static_cast<double>(f.size() - 1);
        if (spacing > 0.0) {
            us.push_back(s.u);
            lopt.push_back(kSpeedOfLight / (2.0 * spacing));
        }
    }
    if (us.empty()) throw InsufficientRangeError("ladder fit needs scans with at least two resonances");
    const auto lopt_poly = cubic_fit(us, lopt);

    // Parameters: t_d and the cubic coefficients of L(u), all in micrometres.
    const double um = 1e-6;
    auto length_at = [&](const Eigen::VectorXd& p, double u) {
        return (p[1] + u * (p[2] + u * (p[3] + u * p[4]))) * um;
    };
    double fscale = 0.0;
    for (const auto& o : observed) fscale = std::max(fscale, o.frequency);
    fscale *= 1e-6;  // residual unit, roughly a part per million of the optical frequency

    std::vector<int> modes(observed.size());
    auto assign = [&](const Eigen::VectorXd& p) {
        for (size_t i = 0; i < observed.size(); ++i)
            modes[i] = nearest_mode(length_at(p, u_obs[i]), p[0] * um, n, observed[i].frequency);
    };
    numerics::LeastSquaresProblem prob;
    prob.n_params = 5;
    prob.n_residuals = static_cast<int>(observed.size());
    prob.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        for (size_t i = 0; i < observed.size(); ++i) {
            const double L = length_at(p, u_obs[i]);
            r[static_cast<long>(i)] = (ladder_frequency(L, p[0] * um, n, modes[i]) - observed[i].frequency) / fscale;
        }
    };
    numerics::LeastSquaresOptions lm;
    lm.scale = {0.1, 0.1, 0.1, 0.1, 0.1};
    lm.max_iterations = 300;

    auto polish = [&](Eigen::VectorXd p) {
        numerics::LeastSquaresResult best;
        for (int outer = 0; outer < 12; ++outer) {
            assign(p);
            const auto before = modes;
            best = numerics::levenberg_marquardt(prob, p, lm);
            p = best.params;
            assign(p);
            if (modes == before) break;
        }
        return best;
    };

    // Coarse search over thickness. For each trial t_d every scan is solved on its own:
    // sorted resonances belong to consecutive mode numbers, so only the lowest mode
    // number is unknown, and the length follows by Gauss-Newton.
    std::vector<std::vector<double>> sorted(scans.size());
    for (size_t j = 0; j < scans.size(); ++j) {
        for (size_t i : scans[j].obs) sorted[j].push_back(observed[i].frequency);
        std::sort(sorted[j].begin(), sorted[j].end());
    }
    auto scan_fit = [&](const std::vector<double>& f, double t, double lopt_guess, double& L_out) {
        const int m_est = static_cast<int>(std::lround(2.0 * lopt_guess * f.front() / kSpeedOfLight));
        double best_cost = std::numeric_limits<double>::infinity();
        for (int m0 = std::max(1, m_est - 2); m0 <= m_est + 2; ++m0) {
            double L = m0 * kSpeedOfLight / (2.0 * f.front()) - (n - 1.0) * t;
            auto cost = [&](double len, double* grad) {
                double c = 0.0, g = 0.0, h = 0.0;
                for (size_t k = 0; k < f.size(); ++k) {
                    const int m = m0 + static_cast<int>(k);
                    const double r = ladder_frequency(len, t, n, m) - f[k];
                    const double d = (ladder_frequency(len + 1e-12, t, n, m) - ladder_frequency(len - 1e-12, t, n, m)) / 2e-12;
                    c += r * r;
                    g += r * d;
                    h += d * d;
                }
                if (grad) *grad = h > 0.0 ? g / h : 0.0;
                return c;
            };
            bool ok = L > t;
            for (int it = 0; it < 4 && ok; ++it) {
                double step = 0.0;
                cost(L, &step);
                L -= step;
                ok = L > t && std::isfinite(L);
            }
            if (!ok) continue;
            const double c = cost(L, nullptr);
            if (c < best_cost) {
                best_cost = c;
                L_out = L;
            }
        }
        return best_cost;
    };
    std::vector<std::pair<double, Eigen::VectorXd>> starts;
    const int nt = std::max(1, static_cast<int>(std::round(options.thickness_max / options.thickness_step)));
    for (int it = 0; it <= nt; ++it) {
        const double t = options.thickness_max * it / nt;
        std::vector<double> su, sl;
        for (size_t j = 0; j < scans.size(); ++j) {
            if (sorted[j].size() < 2) continue;
            const double u = scans[j].u;
            const double guess = lopt_poly[0] + u * (lopt_poly[1] + u * (lopt_poly[2] + u * lopt_poly[3]));
            double L = 0.0;
            const double c = scan_fit(sorted[j], t, guess, L);
            if (!std::isfinite(c)) continue;
            su.push_back(u);
            sl.push_back(L);
        }
        if (su.size() < 2) continue;
        const auto poly = cubic_fit(su, sl);
        Eigen::VectorXd p(5);
        p << t / um, poly[0] / um, poly[1] / um, poly[2] / um, poly[3] / um;
        // Rank by the joint model at the start: near the true t_d the per-scan lengths
        // lie on a smooth curve, elsewhere they scatter by fractions of a wavelength.
        assign(p);
        Eigen::VectorXd r(prob.n_residuals);
        prob.residuals(p, r);
        starts.emplace_back(r.squaredNorm(), p);
    }
    if (starts.empty()) throw InsufficientRangeError("ladder fit found no admissible starting point");
    const size_t keep = std::min<size_t>(6, starts.size());
    std::partial_sort(starts.begin(), starts.begin() + static_cast<long>(keep), starts.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

    numerics::LeastSquaresResult best;
    std::vector<int> best_modes;
    best.cost = std::numeric_limits<double>::infinity();
    for (size_t s = 0; s < keep; ++s) {
        auto r = polish(starts[s].second);
        if (r.cost < best.cost) {
            best = r;
            best_modes = modes;
        }
    }
    modes = best_modes;
    const Eigen::VectorXd& p = best.params;

    ResonanceLadderFit fit;
    fit.model.membrane_index = n;
    fit.model.membrane_thickness = p[0] * um;
    // Convert L(u) to L(v) with u = (v - vm) / vh.
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j <= k; ++j) {
            double binom = 1.0;
            for (int i = 0; i < j; ++i) binom = binom * (k - i) / (i + 1);
            A(j, k) = binom * std::pow(-vm, k - j) / std::pow(vh, k);
        }
    const Eigen::Vector4d q(p[1] * um, p[2] * um, p[3] * um, p[4] * um);
    const Eigen::Vector4d cv = A * q;
    for (int k = 0; k < 4; ++k) fit.model.piezo[static_cast<size_t>(k)] = cv[k];

    const long N = static_cast<long>(observed.size());
    const double dof = std::max<long>(1, N - 5);
    const double s2 = 2.0 * best.cost / dof;
    const Eigen::MatrixXd JtJ = best.jacobian.transpose() * best.jacobian;
    const Eigen::MatrixXd cov = JtJ.completeOrthogonalDecomposition().pseudoInverse() * s2;
    fit.thickness_error = std::sqrt(std::max(0.0, cov(0, 0))) * um;
    Eigen::Matrix4d covq = cov.block(1, 1, 4, 4) * um * um;
    const Eigen::Matrix4d covc = A * covq * A.transpose();
    for (int k = 0; k < 4; ++k) fit.piezo_error[static_cast<size_t>(k)] = std::sqrt(std::max(0.0, covc(k, k)));
    fit.correlation.resize(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            const double d = std::sqrt(cov(i, i) * cov(j, j));
            fit.correlation(i, j) = d > 0.0 ? cov(i, j) / d : (i == j ? 1.0 : 0.0);
        }

    for (const auto& [v, idx] : groups) {
        fit.controls.push_back(v);
        fit.lengths.push_back(fit.model.length(v));
    }
    fit.mode_numbers = modes;
    double sum = 0.0, sum2 = 0.0;
    for (long i = 0; i < N; ++i) {
        const double r = best.residuals[i] * fscale;
        fit.residuals.push_back(r);
        sum += r;
        sum2 += r * r;
    }
    fit.residual_mean = sum / N;
    fit.residual_rms = std::sqrt(sum2 / N);
    fit.branches = static_cast<int>(std::set<int>(modes.begin(), modes.end()).size());

    std::ostringstream warn;
    if (fit.branches < 3) warn << "fewer than 3 resonance branches; ";
    const double span = std::abs(fit.model.length(vhi) - fit.model.length(vlo));
    if (span < 0.5 * kSpeedOfLight / (fscale * 1e6)) warn << "length span below half a wavelength, no avoided crossing sampled; ";
    double worst = 0.0;
    for (int j = 1; j < 5; ++j) worst = std::max(worst, std::abs(fit.correlation(0, j)));
    if (worst > 0.999) warn << "t_d strongly correlated with the piezo coefficients (|rho| = " << worst << "); ";
    fit.warning = warn.str();
    if (!fit.warning.empty()) fit.warning.resize(fit.warning.size() - 2);
    return fit;
}

}  // namespace fpcav
