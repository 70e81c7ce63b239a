#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "glissade/signal_io.hpp"

namespace glissade::preprocess {

/// Rectified speed signal derived from one record's horizontal channel.
struct VelocitySignal {
    std::vector<double> values;  // deg/s
    double sample_period_s = 0.005;
    std::size_t source_offset = 0;
};

/// Sliding median over an odd window with edge replication, so the output has
/// the input's length. Errors: EvenWindow (also for 0), EmptyInput.
std::vector<double> median_filter(std::span<const double> samples, std::size_t window);

/// 11-point Lanczos low-noise differentiator:
///   f'_k = sum_{j=1..5} j (f_{k+j} - f_{k-j}) / (110 h)
/// Samples beyond either end are replicated from the nearest edge sample.
/// Errors: TooShort (fewer than 11 samples), NonPositiveStep.
std::vector<double> lanczos11_derivative(std::span<const double> samples, double h);

std::vector<double> rectify(std::span<const double> velocities);

struct PreprocessOptions {
    std::size_t median_window = 15;
    // Replaces the record's own sample period in the differentiator.
    std::optional<double> step_override_s;

    void validate() const;
};

/// median_filter -> lanczos11_derivative -> rectify on the horizontal channel.
VelocitySignal velocity_signal(const io::EogRecord& record, const PreprocessOptions& options = {});

}  // namespace glissade::preprocess
