#include "decoupler/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "decoupler/errors.hpp"

namespace decoupler::fitting {

void DecayCurve::check() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!std::isfinite(p.t) || !std::isfinite(p.value) || !std::isfinite(p.std_error))
            throw std::invalid_argument(fmt::format("decay curve point {} is not finite", i));
        if (p.std_error < 0.0) throw std::invalid_argument(fmt::format("decay curve point {} has negative std_error", i));
        if (i > 0 && !(p.t > points[i - 1].t))
            throw std::invalid_argument(fmt::format("decay curve times not strictly increasing at point {}", i));
    }
}

namespace {

constexpr double kLinLo = 0.05;
constexpr double kLinHi = 0.95;

// 1/σ² per point; zero errors are floored at the smallest positive error so
// exact points (e.g. t = 0) do not get infinite weight. All-zero → unit weights.
Eigen::VectorXd point_weights(const DecayCurve& c, bool& absolute_sigma)
{
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& p : c.points)
        if (p.std_error > 0.0) floor = std::min(floor, p.std_error);
    absolute_sigma = std::isfinite(floor);
    Eigen::VectorXd w(static_cast<Eigen::Index>(c.points.size()));
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const double s = absolute_sigma ? std::max(c.points[i].std_error, floor) : 1.0;
        w(static_cast<Eigen::Index>(i)) = 1.0 / (s * s);
    }
    return w;
}

// Shape exp(−g(t; θ)) with one positive shape parameter θ.
struct Shape {
    const char* name;
    std::function<double(double t, double theta)> g;
    std::function<double(double t, double theta)> dg;  // ∂g/∂θ
};

struct Linearized {
    std::vector<double> log_t;
    std::vector<double> y;  // ln(−ln u)
};

Linearized linearize(const DecayCurve& c, const FitOptions& o)
{
    Linearized lin;
    for (const auto& p : c.points) {
        const double u = (p.value - o.baseline) / o.amplitude;
        if (p.t > 0.0 && u > kLinLo && u < kLinHi) {
            lin.log_t.push_back(std::log(p.t));
            lin.y.push_back(std::log(-std::log(u)));
        }
    }
    if (lin.y.size() < 4)
        throw std::invalid_argument(fmt::format("fit needs >= 4 points with normalized value in ({}, {}), got {}",
                                                kLinLo, kLinHi, lin.y.size()));
    return lin;
}

// Damped Gauss–Newton on θ = (shape, [A, c]); step halving on residual increase.
FitResult refine(const DecayCurve& c, const FitOptions& o, const Shape& shape, double theta0)
{
    bool absolute_sigma = false;
    const Eigen::VectorXd w = point_weights(c, absolute_sigma);
    const auto n_pts = static_cast<Eigen::Index>(c.points.size());
    const Eigen::Index k = o.free_amplitude ? 3 : 1;

    Eigen::VectorXd theta(k);
    theta(0) = theta0;
    if (o.free_amplitude) {
        theta(1) = o.amplitude;
        theta(2) = o.baseline;
    }

    const auto model = [&](const Eigen::VectorXd& th, Eigen::VectorXd& resid, Eigen::MatrixXd* jac) {
        const double A = o.free_amplitude ? th(1) : o.amplitude;
        const double base = o.free_amplitude ? th(2) : o.baseline;
        resid.resize(n_pts);
        if (jac) jac->resize(n_pts, k);
        for (Eigen::Index i = 0; i < n_pts; ++i) {
            const auto& p = c.points[static_cast<std::size_t>(i)];
            const double e = std::exp(-shape.g(p.t, th(0)));
            resid(i) = p.value - (A * e + base);
            if (jac) {
                (*jac)(i, 0) = -A * e * shape.dg(p.t, th(0));
                if (o.free_amplitude) {
                    (*jac)(i, 1) = e;
                    (*jac)(i, 2) = 1.0;
                }
            }
        }
        return resid.dot(w.asDiagonal() * resid);
    };

    FitResult out;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    double ssr = model(theta, r, &J);
    for (out.iterations = 1; out.iterations <= o.max_iterations; ++out.iterations) {
        const Eigen::MatrixXd JtW = J.transpose() * w.asDiagonal();
        const Eigen::VectorXd step = (JtW * J).ldlt().solve(JtW * r);
        double scale = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        Eigen::VectorXd r_trial;
        for (int h = 0; h < 40; ++h, scale *= 0.5) {
            trial = theta + scale * step;
            if (!(trial(0) > 0.0)) continue;
            const double s = model(trial, r_trial, nullptr);
            if (std::isfinite(s) && s <= ssr) {
                accepted = true;
                ssr = s;
                break;
            }
        }
        const double rel = (scale * step).cwiseAbs().cwiseQuotient(theta.cwiseAbs().cwiseMax(1e-12)).maxCoeff();
        if (!accepted) {
            // No descent along the GN direction: at a minimum to working precision.
            out.converged = step.cwiseAbs().cwiseQuotient(theta.cwiseAbs().cwiseMax(1e-12)).maxCoeff() < 1e-6;
            break;
        }
        theta = trial;
        ssr = model(theta, r, &J);
        if (rel < o.step_tol) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, o.max_iterations);

    out.residual = ssr;
    out.dof = static_cast<std::size_t>(std::max<Eigen::Index>(n_pts - k, 0));
    out.reduced_chi2 = out.dof > 0 ? ssr / static_cast<double>(out.dof) : 0.0;
    Eigen::MatrixXd cov = (J.transpose() * w.asDiagonal() * J).inverse();
    if (!absolute_sigma) cov *= out.reduced_chi2;
    out.params[shape.name] = theta(0);
    out.std_errors[shape.name] = std::sqrt(std::max(0.0, cov(0, 0)));
    if (o.free_amplitude) {
        out.params["A"] = theta(1);
        out.params["c"] = theta(2);
        out.std_errors["A"] = std::sqrt(std::max(0.0, cov(1, 1)));
        out.std_errors["c"] = std::sqrt(std::max(0.0, cov(2, 2)));
    }
    if (!std::isfinite(out.residual)) out.converged = false;
    return out;
}

void check_options(const FitOptions& o)
{
    if (!(o.amplitude != 0.0) || !std::isfinite(o.amplitude) || !std::isfinite(o.baseline))
        throw std::invalid_argument("fit: amplitude must be finite and nonzero");
}

} // namespace

FitResult fit_gaussian_decay(const DecayCurve& curve, const FitOptions& opts)
{
    curve.check();
    check_options(opts);
    const auto lin = linearize(curve, opts);
    // ln(−ln u) = ln(b²/2) + 2 ln t
    double mean = 0.0;
    for (std::size_t i = 0; i < lin.y.size(); ++i) mean += lin.y[i] - 2.0 * lin.log_t[i];
    mean /= static_cast<double>(lin.y.size());
    const double b0 = std::sqrt(2.0 * std::exp(mean));

    const Shape shape{"b", [](double t, double b) { return 0.5 * b * b * t * t; },
                      [](double t, double b) { return b * t * t; }};
    return refine(curve, opts, shape, b0);
}

FitResult fit_cubic_exp(const DecayCurve& curve, const FitOptions& opts)
{
    curve.check();
    check_options(opts);
    const auto lin = linearize(curve, opts);
    // ln(−ln u) = k ln t − k ln T
    const auto m = static_cast<double>(lin.y.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lin.y.size(); ++i) {
        sx += lin.log_t[i];
        sy += lin.y[i];
        sxx += lin.log_t[i] * lin.log_t[i];
        sxy += lin.log_t[i] * lin.y[i];
    }
    const double denom = m * sxx - sx * sx;
    double slope = denom > 0.0 ? (m * sxy - sx * sy) / denom : 3.0;
    if (!(slope > 0.0)) slope = 3.0;
    const double intercept = (sy - slope * sx) / m;
    const double t0 = std::exp(-intercept / slope);

    const Shape shape{"T_coh",
                      [](double t, double T) {
                          const double u = t / T;
                          return u * u * u;
                      },
                      [](double t, double T) {
                          const double u = t / T;
                          return -3.0 * u * u * u / T;
                      }};
    return refine(curve, opts, shape, t0);
}

double one_over_e_time(const DecayCurve& curve, double amplitude, double baseline)
{
    curve.check();
    const double level = std::exp(-1.0);
    const auto u = [&](std::size_t i) { return (curve.points[i].value - baseline) / amplitude; };
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const double u0 = u(i);
        const double u1 = u(i + 1);
        if (u0 >= level && u1 < level) {
            const double t0 = curve.points[i].t;
            const double t1 = curve.points[i + 1].t;
            return t0 + (u0 - level) / (u0 - u1) * (t1 - t0);
        }
    }
    throw NumericalError("one_over_e_time: curve does not cross 1/e in range");
}

FitResult fit_scaling(std::span<const ScalingPoint> points, bool free_exponent)
{
    std::set<double> distinct;
    bool weighted = !points.empty();
    for (const auto& p : points) {
        if (!(p.n > 0.0) || !(p.t_coh > 0.0) || !(p.std_error >= 0.0))
            throw std::invalid_argument("fit_scaling: n and T_coh must be positive");
        distinct.insert(p.n);
        if (!(p.std_error > 0.0)) weighted = false;
    }
    if (distinct.size() < 3)
        throw std::invalid_argument(fmt::format("fit_scaling needs >= 3 distinct n, got {}", distinct.size()));

    const auto m = static_cast<Eigen::Index>(points.size());
    const Eigen::Index k = free_exponent ? 2 : 1;
    Eigen::MatrixXd X(m, k);
    Eigen::VectorXd y(m);
    Eigen::VectorXd w(m);
    constexpr double fixed_p = 2.0 / 3.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        const double ln_n = std::log(p.n);
        X(i, 0) = 1.0;
        if (free_exponent) X(i, 1) = ln_n;
        y(i) = std::log(p.t_coh) - (free_exponent ? 0.0 : fixed_p * ln_n);
        const double s = weighted ? p.std_error / p.t_coh : 1.0;
        w(i) = 1.0 / (s * s);
    }
    const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
    const Eigen::MatrixXd normal = XtW * X;
    const Eigen::VectorXd beta = normal.ldlt().solve(XtW * y);
    const Eigen::VectorXd r = y - X * beta;

    FitResult out;
    out.residual = r.dot(w.asDiagonal() * r);
    out.dof = static_cast<std::size_t>(m - k);
    out.reduced_chi2 = out.dof > 0 ? out.residual / static_cast<double>(out.dof) : 0.0;
    Eigen::MatrixXd cov = normal.inverse();
    if (!weighted) cov *= out.reduced_chi2;
    const double t2 = std::exp(beta(0));
    out.params["T2"] = t2;
    out.std_errors["T2"] = t2 * std::sqrt(std::max(0.0, cov(0, 0)));
    out.params["p"] = free_exponent ? beta(1) : fixed_p;
    out.std_errors["p"] = free_exponent ? std::sqrt(std::max(0.0, cov(1, 1))) : 0.0;
    out.iterations = 1;
    out.converged = std::isfinite(out.residual) && std::isfinite(t2);
    return out;
}

} // namespace decoupler::fitting
