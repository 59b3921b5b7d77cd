#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace fpcav::numerics {

using ScalarFn = std::function<double(double)>;

// Root of f on [a, b]; f(a) and f(b) must have opposite signs (or one is zero).
double find_root(const ScalarFn& f, double a, double b, double rel_tol = 1e-14, int max_iter = 200);
double find_root(const ScalarFn& f, double a, double b, double fa, double fb, double rel_tol = 1e-14,
                 int max_iter = 200);

struct Extremum {
    double x;
    double value;
};

// Brent maximisation of a unimodal function on [a, b].
Extremum maximize(const ScalarFn& f, double a, double b, int bits = 45);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

QuadratureRule gauss_legendre(int n);  // on [-1, 1]
QuadratureRule gauss_hermite(int n);   // weight exp(-x^2) on the real line

// Composite rule: [a, b] split into panels no wider than max_panel.
double integrate_panels(const ScalarFn& f, double a, double b, double max_panel, const QuadratureRule& rule);

// Trapezoid rule over uniformly spaced samples.
double trapezoid(const std::vector<double>& y, double dx);

struct LeastSquaresProblem {
    int n_params = 0;
    int n_residuals = 0;
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> residuals;
    // Optional; central finite differences are used when empty.
    std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)> jacobian;
};

struct LeastSquaresOptions {
    int max_iterations = 200;
    double ftol = 1e-15;
    double xtol = 1e-13;
    double gtol = 1e-14;
    // Per-parameter magnitude used for finite-difference steps and step-size tests.
    std::vector<double> scale;
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;  // 0.5 * |r|^2
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_history;
};

LeastSquaresResult levenberg_marquardt(const LeastSquaresProblem& problem, const Eigen::VectorXd& p0,
                                       const LeastSquaresOptions& options = {});

Eigen::MatrixXd finite_difference_jacobian(const LeastSquaresProblem& problem, const Eigen::VectorXd& p,
                                           const std::vector<double>& scale);

}  // namespace fpcav::numerics
