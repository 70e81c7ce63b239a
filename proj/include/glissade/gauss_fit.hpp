#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace glissade::segmentation {
struct VelocityProfile;
}

namespace glissade::fit {

/// Coefficients of  y(x) = sum_i a_i exp(-((x - b_i) / c_i)^2).
/// x is the sample index within a profile, so b and c are in samples.
struct Gauss3Params {
    std::array<double, 3> a{};
    std::array<double, 3> b{};
    std::array<double, 3> c{1.0, 1.0, 1.0};

    bool valid() const noexcept;

    /// Flattened as a1 a2 a3 b1 b2 b3 c1 c2 c3, the layout of gauss3_gradient.
    std::array<double, 9> to_array() const noexcept;
    static Gauss3Params from_array(const std::array<double, 9>& p) noexcept;
};

double gauss3_eval(const Gauss3Params& params, double x) noexcept;

/// Partial derivatives of gauss3_eval with respect to (a1..a3, b1..b3, c1..c3).
std::array<double, 9> gauss3_gradient(const Gauss3Params& params, double x) noexcept;

/// Model evaluated at x = 0, 1, ..., n-1.
std::vector<double> gauss3_curve(const Gauss3Params& params, std::size_t n);

struct InitOptions {
    // A secondary maximum must reach this fraction of the main peak to seed component 2.
    double secondary_min_fraction = 0.03;
};

/// Heuristic starting point for the fit:
///  - component 1 sits on the main peak, width from the half-maximum crossings;
///  - component 2 sits on the largest local maximum after the main lobe's
///    first valley, or one width after the main peak when there is none;
///  - component 3 sits half a width before the main peak at a quarter amplitude.
/// Errors: DegenerateProfile (empty, or no positive sample).
Gauss3Params initial_guess(std::span<const double> values, const InitOptions& options = {});
Gauss3Params initial_guess(const segmentation::VelocityProfile& profile, const InitOptions& options = {});

struct FitOptions {
    double tol = 1e-8;         // relative RMSE change on an accepted step
    double step_tol = 1e-10;   // Euclidean norm of the parameter step
    int max_iter = 200;
    double lambda_init = 1e-3;
    double lambda_factor = 10.0;
    // Lower bound on the Marquardt scale of each parameter, relative to the
    // largest scale in its group (a, b or c).
    double damping_floor = 1e-3;
    // Adds the second-order (geodesic acceleration) correction to each step;
    // the step is rejected when 2|accel| / |velocity| exceeds acceleration_ratio.
    bool geodesic_acceleration = true;
    double acceleration_ratio = 0.75;
    // Reflect amplitudes to |a| after each step, as is always done for widths.
    bool nonnegative_amplitudes = true;

    void validate() const;
};

struct FitResult {
    Gauss3Params params;
    double rmse = 0.0;
    int iterations = 0;
    bool converged = false;
    double initial_rmse = 0.0;
};

/// Levenberg-Marquardt fit of gauss3 to `values` sampled at x = 0..n-1.
///
/// Lambda starts at lambda_init, is divided by lambda_factor after an accepted
/// step and multiplied by it after a rejected one. Only steps that reduce the
/// residual sum of squares are accepted, so the returned RMSE never exceeds the
/// initial one. Every trial step counts as an iteration. Widths (and by default
/// amplitudes) are reflected to their absolute value after each step.
/// Converged means the relative RMSE change of an accepted step fell below tol,
/// the step norm fell below step_tol, or no damping gave descent.
/// Errors: TooFewPoints (n < 9), NonFiniteResidual (non-finite data or initial model).
FitResult fit_gauss3(std::span<const double> values, const Gauss3Params& init, const FitOptions& options = {});

/// sqrt(mean((observed - predicted)^2)). Errors: LengthMismatch, EmptyInput.
double rmse(std::span<const double> observed, std::span<const double> predicted);

}  // namespace glissade::fit
