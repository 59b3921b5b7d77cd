#include "fpcav/numerics.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <limits>

#include "fpcav/core.hpp"

namespace fpcav::numerics {

double find_root(const ScalarFn& f, double a, double b, double fa, double fb, double rel_tol, int max_iter) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) throw AccuracyError("find_root: interval does not bracket a root");
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    auto tol = [rel_tol](double x, double y) {
        return std::abs(x - y) <= rel_tol * std::max(std::abs(x), std::abs(y)) ||
               std::abs(x - y) <= std::numeric_limits<double>::min();
    };
    auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    if (iters >= static_cast<std::uintmax_t>(max_iter) && !tol(lo, hi))
        throw AccuracyError("find_root: iteration limit reached");
    return 0.5 * (lo + hi);
}

double find_root(const ScalarFn& f, double a, double b, double rel_tol, int max_iter) {
    return find_root(f, a, b, f(a), f(b), rel_tol, max_iter);
}

Extremum maximize(const ScalarFn& f, double a, double b, int bits) {
    std::uintmax_t iters = 500;
    auto [x, v] = boost::math::tools::brent_find_minima([&](double t) { return -f(t); }, a, b, bits, iters);
    return {x, -v};
}

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix.
QuadratureRule golub_welsch(const Eigen::VectorXd& offdiag, double mu0) {
    const auto n = offdiag.size() + 1;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) J(i, i + 1) = J(i + 1, i) = offdiag(i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<size_t>(n));
    rule.weights.resize(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[static_cast<size_t>(i)] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[static_cast<size_t>(i)] = mu0 * v0 * v0;
    }
    return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw Error("gauss_legendre: n must be positive");
    if (n == 1) return {{0.0}, {2.0}};
    Eigen::VectorXd b(n - 1);
    for (int k = 1; k < n; ++k) b(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    return golub_welsch(b, 2.0);
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw Error("gauss_hermite: n must be positive");
    if (n == 1) return {{0.0}, {std::sqrt(kPi)}};
    Eigen::VectorXd b(n - 1);
    for (int k = 1; k < n; ++k) b(k - 1) = std::sqrt(k / 2.0);
    return golub_welsch(b, std::sqrt(kPi));
}

double integrate_panels(const ScalarFn& f, double a, double b, double max_panel, const QuadratureRule& rule) {
    if (!(b > a)) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        for (size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    }
    return 0.5 * h * sum;
}

double trapezoid(const std::vector<double>& y, double dx) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dx;
}

Eigen::MatrixXd finite_difference_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& p,
                                           const std::vector<double>& scale) {
    Eigen::MatrixXd J(problem.n_residuals, problem.n_params);
    Eigen::VectorXd rp(problem.n_residuals), rm(problem.n_residuals);
    for (int j = 0; j < problem.n_params; ++j) {
        const double s = scale.empty() ? 1.0 : scale[static_cast<size_t>(j)];
        const double h = 1e-6 * std::max(std::abs(p(j)), s);
        Eigen::VectorXd q = p;
        q(j) = p(j) + h;
        problem.residuals(q, rp);
        q(j) = p(j) - h;
        problem.residuals(q, rm);
        J.col(j) = (rp - rm) / (2.0 * h);
    }
    return J;
}

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& p0,
                                       const LeastSquaresOptions& options) {
    const int n = problem.n_params;
    const int m = problem.n_residuals;
    if (p0.size() != n) throw Error("levenberg_marquardt: parameter size mismatch");

    auto jac = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd J(m, n);
        if (problem.jacobian)
            problem.jacobian(p, J);
        else
            J = finite_difference_jacobian(problem, p, options.scale);
        return J;
    };

    LeastSquaresResult res;
    res.params = p0;
    res.residuals.resize(m);
    problem.residuals(res.params, res.residuals);
    res.cost = 0.5 * res.residuals.squaredNorm();
    res.cost_history.push_back(res.cost);
    if (!std::isfinite(res.cost)) throw FitQualityError("least squares: non-finite residuals at the initial point");

    Eigen::MatrixXd J = jac(res.params);
    double lambda = -1.0;
    Eigen::VectorXd r_new(m);

    for (int it = 0; it < options.max_iterations; ++it) {
        res.iterations = it + 1;
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * res.residuals;
        Eigen::VectorXd d = A.diagonal();
        for (int j = 0; j < n; ++j)
            if (!(d(j) > 0.0)) d(j) = 1.0;  // parameter has no influence; keep the solve regular
        if (lambda < 0.0) lambda = 1e-3;

        // Orthogonality of residual and Jacobian columns (MINPACK gtol test).
        const double rnorm = res.residuals.norm();
        double gmax = 0.0;
        for (int j = 0; j < n; ++j) {
            const double cn = J.col(j).norm();
            if (cn > 0.0 && rnorm > 0.0) gmax = std::max(gmax, std::abs(g(j)) / (cn * rnorm));
        }
        if (rnorm == 0.0 || gmax <= options.gtol) {
            res.converged = true;
            break;
        }

        bool accepted = false;
        Eigen::VectorXd step;
        double cost_new = res.cost;
        for (int tries = 0; tries < 60; ++tries) {
            // Jacobi-scaled system keeps the solve well conditioned for mixed units.
            const Eigen::VectorXd dh = d.cwiseSqrt().cwiseInverse();
            Eigen::MatrixXd Aug = dh.asDiagonal() * A * dh.asDiagonal();
            Aug.diagonal().array() += lambda;
            step = dh.cwiseProduct(Aug.ldlt().solve(-dh.cwiseProduct(g)));
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd p_new = res.params + step;
            problem.residuals(p_new, r_new);
            cost_new = 0.5 * r_new.squaredNorm();
            if (std::isfinite(cost_new) && cost_new <= res.cost) {
                // Gain ratio against the linear model decides how far to relax damping.
                const double predicted = -(step.dot(g) + 0.5 * step.dot(A * step));
                const double rho = predicted > 0.0 ? (res.cost - cost_new) / predicted : 0.0;
                lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                res.params = p_new;
                res.residuals = r_new;
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            // No descent direction left at machine precision: treat as converged.
            res.converged = true;
            break;
        }
        const double old_cost = res.cost;
        res.cost = cost_new;
        res.cost_history.push_back(res.cost);
        J = jac(res.params);

        bool small_step = true;
        for (int j = 0; j < n; ++j) {
            const double s = options.scale.empty() ? 1.0 : options.scale[static_cast<size_t>(j)];
            if (std::abs(step(j)) > options.xtol * (std::abs(res.params(j)) + s * 1e-3)) small_step = false;
        }
        if (small_step || old_cost - res.cost <= options.ftol * old_cost || res.cost == 0.0) {
            res.converged = true;
            break;
        }
    }
    res.jacobian = J;
    return res;
}

}  // namespace fpcav::numerics
