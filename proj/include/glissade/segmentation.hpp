#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glissade/preprocess.hpp"

namespace glissade::segmentation {

/// One saccade (possibly with a glissade) cut from a VelocitySignal.
/// start_index and peak_index are in parent-signal coordinates.
struct VelocityProfile {
    std::vector<double> values;
    std::size_t start_index = 0;
    std::size_t peak_index = 0;
    double sample_period_s = 0.005;
};

/// Local maxima (signal[i] > signal[i-1] && signal[i] >= signal[i+1]) at or above
/// min_height, thinned so that kept peaks are at least min_distance apart. When
/// two candidates conflict the higher one wins, ties going to the lower index.
/// The end samples are never peaks. Result is sorted ascending.
std::vector<std::size_t> find_peaks(std::span<const double> signal, double min_height, std::size_t min_distance);

/// Backward onset search from a peak.
///
/// Walks left from peak_index while the preceding sample is still at or above
/// threshold_fraction * signal[peak_index]; the walk stops on the last sample
/// at or above that level. The onset is the argmin of the `neighborhood`-wide
/// window centered on the stop, clamped to [lower_bound, peak_index]. If the
/// walk reaches lower_bound without the signal dropping below the level, the
/// onset is the argmin of the whole range [lower_bound, peak_index].
std::size_t find_onset(std::span<const double> signal, std::size_t peak_index, double threshold_fraction,
                       std::size_t neighborhood, std::size_t lower_bound = 0);

/// Profile k spans [onsets[k], onsets[k+1]); the last runs to the signal end.
/// Errors: EmptyOnsets, InvalidConfig (unsorted / out of range onsets).
std::vector<VelocityProfile> split_profiles(const preprocess::VelocitySignal& signal,
                                            std::span<const std::size_t> onsets);

struct SegmentOptions {
    double min_peak_height = 30.0;     // deg/s
    std::size_t min_peak_distance = 40;
    double onset_fraction = 0.1;
    std::size_t onset_neighborhood = 5;

    void validate() const;
};

struct Segmentation {
    std::vector<std::size_t> peaks;
    std::vector<std::size_t> onsets;
    std::vector<VelocityProfile> profiles;
};

/// Peaks, then onsets (each bounded below by the previous peak), then profiles.
Segmentation segment(const preprocess::VelocitySignal& signal, const SegmentOptions& options = {});

}  // namespace glissade::segmentation
