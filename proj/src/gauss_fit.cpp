#include "glissade/gauss_fit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "glissade/error.hpp"
#include "glissade/segmentation.hpp"

namespace glissade::fit {

namespace {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

Vec9 to_vec(const Gauss3Params& p) {
    const auto arr = p.to_array();
    return Eigen::Map<const Vec9>(arr.data());
}

Gauss3Params from_vec(const Vec9& v) {
    std::array<double, 9> arr{};
    Eigen::Map<Vec9>(arr.data()) = v;
    return Gauss3Params::from_array(arr);
}

double sum_of_squares(std::span<const double> y, const Gauss3Params& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - gauss3_eval(p, static_cast<double>(i));
        s += r * r;
    }
    return s;
}

// Linear interpolation of where the signal crosses `level` between i and j.
double crossing(std::span<const double> v, std::size_t i, std::size_t j, double level) {
    const double dv = v[j] - v[i];
    if (dv == 0.0) return static_cast<double>(i);
    return static_cast<double>(i) + (level - v[i]) / dv * (static_cast<double>(j) - static_cast<double>(i));
}

}  // namespace

bool Gauss3Params::valid() const noexcept {
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i]) || !std::isfinite(c[i])) return false;
        if (!(c[i] > 0.0)) return false;
    }
    return true;
}

std::array<double, 9> Gauss3Params::to_array() const noexcept {
    return {a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2]};
}

Gauss3Params Gauss3Params::from_array(const std::array<double, 9>& p) noexcept {
    Gauss3Params out;
    for (int i = 0; i < 3; ++i) {
        out.a[i] = p[i];
        out.b[i] = p[3 + i];
        out.c[i] = p[6 + i];
    }
    return out;
}

double gauss3_eval(const Gauss3Params& params, double x) noexcept {
    double y = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double u = (x - params.b[i]) / params.c[i];
        y += params.a[i] * std::exp(-u * u);
    }
    return y;
}

std::array<double, 9> gauss3_gradient(const Gauss3Params& params, double x) noexcept {
    std::array<double, 9> g{};
    for (int i = 0; i < 3; ++i) {
        const double u = (x - params.b[i]) / params.c[i];
        const double e = std::exp(-u * u);
        const double ae = params.a[i] * e;
        g[i] = e;
        g[3 + i] = ae * 2.0 * u / params.c[i];
        g[6 + i] = ae * 2.0 * u * u / params.c[i];
    }
    return g;
}

std::vector<double> gauss3_curve(const Gauss3Params& params, std::size_t n) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = gauss3_eval(params, static_cast<double>(i));
    return y;
}

Gauss3Params initial_guess(std::span<const double> v, const InitOptions& options) {
    if (v.empty()) throw Error(Errc::DegenerateProfile, "empty profile");
    const std::size_t n = v.size();
    const std::size_t peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    const double top = v[peak];
    if (!(top > 0.0) || !std::isfinite(top)) throw Error(Errc::DegenerateProfile, "profile has no positive sample");

    Gauss3Params g;
    g.a[0] = top;
    g.b[0] = static_cast<double>(peak);

    const double half = 0.5 * top;
    double width_sum = 0.0;
    int sides = 0;
    for (std::size_t i = peak; i > 0; --i) {
        if (v[i - 1] <= half) {
            width_sum += static_cast<double>(peak) - crossing(v, i - 1, i, half);
            ++sides;
            break;
        }
    }
    for (std::size_t i = peak; i + 1 < n; ++i) {
        if (v[i + 1] <= half) {
            width_sum += crossing(v, i, i + 1, half) - static_cast<double>(peak);
            ++sides;
            break;
        }
    }
    const double c1 = sides > 0 ? (width_sum / sides) / std::sqrt(std::log(2.0)) : static_cast<double>(n) / 6.0;
    g.c[0] = std::max(c1, 1.0);

    // Secondary maximum: the largest interior local max past the main lobe's first valley.
    std::size_t valley = peak;
    while (valley + 1 < n && v[valley + 1] <= v[valley]) ++valley;
    std::size_t secondary = n;
    for (std::size_t i = valley + 1; i + 1 < n; ++i) {
        if (v[i] > v[i - 1] && v[i] >= v[i + 1] && (secondary == n || v[i] > v[secondary])) secondary = i;
    }
    if (secondary < n && v[secondary] >= options.secondary_min_fraction * top && v[secondary] > v[valley]) {
        g.b[1] = static_cast<double>(secondary);
        g.a[1] = v[secondary];
    } else {
        g.b[1] = g.b[0] + g.c[0];
        const auto at = static_cast<std::size_t>(std::clamp(std::lround(g.b[1]), 0L, static_cast<long>(n) - 1));
        g.a[1] = v[at];
    }
    g.c[1] = std::max(g.c[0] / 2.0, 1.0);

    g.b[2] = g.b[0] - g.c[0] / 2.0;
    g.a[2] = top / 4.0;
    g.c[2] = std::max(g.c[0] / 2.0, 1.0);
    return g;
}

Gauss3Params initial_guess(const segmentation::VelocityProfile& profile, const InitOptions& options) {
    return initial_guess(profile.values, options);
}

void FitOptions::validate() const {
    if (!(tol >= 0.0) || !(step_tol >= 0.0)) throw Error(Errc::InvalidConfig, "tolerances must be >= 0");
    if (max_iter < 1) throw Error(Errc::InvalidConfig, "max_iter must be >= 1");
    if (!(lambda_init > 0.0) || !(lambda_factor > 1.0))
        throw Error(Errc::InvalidConfig, "lambda_init must be > 0 and lambda_factor > 1");
    if (!(damping_floor >= 0.0)) throw Error(Errc::InvalidConfig, "damping_floor must be >= 0");
    if (!(acceleration_ratio > 0.0)) throw Error(Errc::InvalidConfig, "acceleration_ratio must be positive");
}

FitResult fit_gauss3(std::span<const double> values, const Gauss3Params& init, const FitOptions& options) {
    options.validate();
    const std::size_t n = values.size();
    if (n < 9) throw Error(Errc::TooFewPoints, "need at least 9 samples, got " + std::to_string(n));
    if (!init.valid()) throw Error(Errc::NonFiniteResidual, "initial parameters are not finite or have c <= 0");

    Gauss3Params params = init;
    double ss = sum_of_squares(values, params);
    if (!std::isfinite(ss)) throw Error(Errc::NonFiniteResidual, "initial residual is not finite");

    const auto rows = static_cast<Eigen::Index>(n);
    const double dn = static_cast<double>(n);
    FitResult result;
    result.initial_rmse = std::sqrt(ss / dn);
    if (ss == 0.0) {
        result.params = params;
        result.converged = true;
        return result;
    }

    Eigen::Matrix<double, Eigen::Dynamic, 9> jac(rows, 9);
    Eigen::VectorXd model(rows);
    Eigen::VectorXd resid(rows);
    Eigen::VectorXd curvature(rows);
    double lambda = options.lambda_init;
    int iterations = 0;
    bool converged = false;
    bool done = false;

    while (!done && iterations < options.max_iter) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double x = static_cast<double>(i);
            const auto grad = gauss3_gradient(params, x);
            for (int k = 0; k < 9; ++k) jac(i, k) = grad[static_cast<std::size_t>(k)];
            model(i) = gauss3_eval(params, x);
            resid(i) = values[static_cast<std::size_t>(i)] - model(i);
        }
        const Mat9 normal = jac.transpose() * jac;
        const Vec9 rhs = jac.transpose() * resid;

        // Marquardt scaling, floored per parameter group (amplitudes, centers,
        // widths) so a component whose amplitude has collapsed cannot take
        // unbounded steps in b or c.
        Vec9 scale = normal.diagonal();
        for (int g = 0; g < 3; ++g) {
            const double floor = options.damping_floor * std::max(scale.segment<3>(3 * g).maxCoeff(), 1e-300);
            for (int k = 3 * g; k < 3 * g + 3; ++k) scale(k) = std::max(scale(k), floor);
        }

        while (iterations < options.max_iter) {
            ++iterations;
            Mat9 damped = normal;
            damped.diagonal() += lambda * scale;
            const auto solver = damped.ldlt();
            const Vec9 velocity = solver.solve(rhs);
            if (!velocity.allFinite()) {
                lambda *= options.lambda_factor;
                continue;
            }
            if (velocity.norm() < options.step_tol) {
                converged = true;
                done = true;
                break;
            }

            Vec9 step = velocity;
            if (options.geodesic_acceleration) {
                // Second directional derivative of the model along the step by a
                // forward difference; the correction bends the step along curved
                // valleys of the objective.
                constexpr double probe = 0.1;
                const Gauss3Params ahead = from_vec(to_vec(params) + probe * velocity);
                const Eigen::VectorXd along = jac * velocity;
                for (Eigen::Index i = 0; i < rows; ++i)
                    curvature(i) = 2.0 / probe * ((gauss3_eval(ahead, static_cast<double>(i)) - model(i)) / probe - along(i));
                const Vec9 accel = -solver.solve(jac.transpose() * curvature);
                if (!accel.allFinite() || 2.0 * accel.norm() > options.acceleration_ratio * velocity.norm()) {
                    lambda *= options.lambda_factor;
                    continue;
                }
                step += 0.5 * accel;
            }

            Vec9 candidate = to_vec(params) + step;
            if (options.nonnegative_amplitudes)
                for (int k = 0; k < 3; ++k) candidate(k) = std::abs(candidate(k));
            for (int k = 6; k < 9; ++k) candidate(k) = std::abs(candidate(k));
            const Gauss3Params trial = from_vec(candidate);
            const double trial_ss = trial.valid() ? sum_of_squares(values, trial) : HUGE_VAL;

            if (std::isfinite(trial_ss) && trial_ss < ss) {
                const double old_rmse = std::sqrt(ss / dn);
                const double new_rmse = std::sqrt(trial_ss / dn);
                params = trial;
                ss = trial_ss;
                lambda = std::max(lambda / options.lambda_factor, 1e-300);
                if ((old_rmse - new_rmse) / old_rmse < options.tol) {
                    converged = true;
                    done = true;
                }
                break;
            }
            lambda *= options.lambda_factor;
            if (lambda > 1e30) {
                // No damping yields descent: a stationary point.
                converged = true;
                done = true;
                break;
            }
        }
    }

    result.params = params;
    result.rmse = rmse(values, gauss3_curve(params, n));
    result.iterations = iterations;
    result.converged = converged;
    return result;
}

double rmse(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size())
        throw Error(Errc::LengthMismatch, "observed and predicted differ in length");
    if (observed.empty()) throw Error(Errc::EmptyInput, "rmse of empty sequences");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double r = observed[i] - predicted[i];
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(observed.size()));
}

}  // namespace glissade::fit
