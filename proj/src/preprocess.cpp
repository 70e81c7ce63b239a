#include "glissade/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "glissade/error.hpp"

namespace glissade::preprocess {

namespace {

// Sample at index i of the signal extended by edge replication.
inline double replicated(std::span<const double> s, std::ptrdiff_t i) {
    const auto n = static_cast<std::ptrdiff_t>(s.size());
    return s[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))];
}

}  // namespace

std::vector<double> median_filter(std::span<const double> samples, std::size_t window) {
    if (window == 0 || window % 2 == 0)
        throw Error(Errc::EvenWindow, "median window must be odd and positive, got " + std::to_string(window));
    if (samples.empty()) throw Error(Errc::EmptyInput, "median filter on an empty signal");

    const auto half = static_cast<std::ptrdiff_t>(window / 2);
    std::vector<double> out(samples.size());
    std::vector<double> buf(window);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto center = static_cast<std::ptrdiff_t>(i);
        for (std::ptrdiff_t k = -half; k <= half; ++k) buf[static_cast<std::size_t>(k + half)] = replicated(samples, center + k);
        std::nth_element(buf.begin(), buf.begin() + half, buf.end());
        out[i] = buf[static_cast<std::size_t>(half)];
    }
    return out;
}

std::vector<double> lanczos11_derivative(std::span<const double> samples, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::NonPositiveStep, "sampling step must be positive");
    if (samples.size() < 11)
        throw Error(Errc::TooShort, "Lanczos-11 needs at least 11 samples, got " + std::to_string(samples.size()));

    const double denom = 110.0 * h;
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto k = static_cast<std::ptrdiff_t>(i);
        double acc = 0.0;
        for (std::ptrdiff_t j = 1; j <= 5; ++j)
            acc += static_cast<double>(j) * (replicated(samples, k + j) - replicated(samples, k - j));
        out[i] = acc / denom;
    }
    return out;
}

std::vector<double> rectify(std::span<const double> velocities) {
    std::vector<double> out(velocities.size());
    std::transform(velocities.begin(), velocities.end(), out.begin(), [](double v) { return std::abs(v); });
    return out;
}

void PreprocessOptions::validate() const {
    if (median_window == 0 || median_window % 2 == 0)
        throw Error(Errc::InvalidConfig, "median window must be odd and positive");
    if (step_override_s && !(*step_override_s > 0.0))
        throw Error(Errc::InvalidConfig, "step override must be positive");
}

VelocitySignal velocity_signal(const io::EogRecord& record, const PreprocessOptions& options) {
    const double h = options.step_override_s.value_or(record.sample_period_s);
    const auto filtered = median_filter(record.horizontal, options.median_window);
    VelocitySignal signal;
    signal.values = rectify(lanczos11_derivative(filtered, h));
    signal.sample_period_s = h;
    return signal;
}

}  // namespace glissade::preprocess
