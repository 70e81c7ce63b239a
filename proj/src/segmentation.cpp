#include "glissade/segmentation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "glissade/error.hpp"

namespace glissade::segmentation {

namespace {

std::size_t argmin(std::span<const double> s, std::size_t first, std::size_t last) {
    std::size_t best = first;
    for (std::size_t i = first + 1; i <= last; ++i)
        if (s[i] < s[best]) best = i;
    return best;
}

}  // namespace

std::vector<std::size_t> find_peaks(std::span<const double> signal, double min_height, std::size_t min_distance) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < signal.size(); ++i) {
        if (signal[i] > signal[i - 1] && signal[i] >= signal[i + 1] && signal[i] >= min_height)
            candidates.push_back(i);
    }
    if (min_distance <= 1 || candidates.size() < 2) return candidates;

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return signal[candidates[l]] > signal[candidates[r]];
    });

    std::set<std::size_t> kept;
    for (auto o : order) {
        const std::size_t idx = candidates[o];
        auto next = kept.lower_bound(idx);
        if (next != kept.end() && *next - idx < min_distance) continue;
        if (next != kept.begin() && idx - *std::prev(next) < min_distance) continue;
        kept.insert(idx);
    }
    return {kept.begin(), kept.end()};
}

std::size_t find_onset(std::span<const double> signal, std::size_t peak_index, double threshold_fraction,
                       std::size_t neighborhood, std::size_t lower_bound) {
    if (peak_index >= signal.size()) throw Error(Errc::InvalidConfig, "peak index out of range");
    const std::size_t lo = std::min(lower_bound, peak_index);
    const double level = threshold_fraction * signal[peak_index];

    std::size_t stop = peak_index;
    while (stop > lo && signal[stop - 1] >= level) --stop;
    if (stop == lo && signal[lo] >= level) return argmin(signal, lo, peak_index);

    const std::size_t half = neighborhood / 2;
    const std::size_t first = stop > lo + half ? stop - half : lo;
    const std::size_t last = std::min(peak_index, stop + half);
    return argmin(signal, first, last);
}

std::vector<VelocityProfile> split_profiles(const preprocess::VelocitySignal& signal,
                                            std::span<const std::size_t> onsets) {
    if (onsets.empty()) throw Error(Errc::EmptyOnsets, "no onsets to split at");
    const auto& v = signal.values;
    for (std::size_t k = 0; k < onsets.size(); ++k) {
        if (onsets[k] >= v.size()) throw Error(Errc::InvalidConfig, "onset beyond signal end");
        if (k > 0 && onsets[k] <= onsets[k - 1]) throw Error(Errc::InvalidConfig, "onsets must strictly increase");
    }

    std::vector<VelocityProfile> profiles;
    profiles.reserve(onsets.size());
    for (std::size_t k = 0; k < onsets.size(); ++k) {
        const std::size_t begin = onsets[k];
        const std::size_t end = k + 1 < onsets.size() ? onsets[k + 1] : v.size();
        VelocityProfile p;
        p.values.assign(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end));
        p.start_index = begin;
        p.peak_index = begin + static_cast<std::size_t>(std::max_element(p.values.begin(), p.values.end()) - p.values.begin());
        p.sample_period_s = signal.sample_period_s;
        profiles.push_back(std::move(p));
    }
    return profiles;
}

void SegmentOptions::validate() const {
    if (min_peak_distance < 1) throw Error(Errc::InvalidConfig, "min peak distance must be >= 1");
    if (!(onset_fraction > 0.0 && onset_fraction < 1.0))
        throw Error(Errc::InvalidConfig, "onset fraction must lie in (0, 1)");
    if (!(min_peak_height >= 0.0)) throw Error(Errc::InvalidConfig, "min peak height must be >= 0");
}

Segmentation segment(const preprocess::VelocitySignal& signal, const SegmentOptions& options) {
    options.validate();
    Segmentation out;
    out.peaks = find_peaks(signal.values, options.min_peak_height, options.min_peak_distance);
    std::size_t lower = 0;
    for (auto p : out.peaks) {
        out.onsets.push_back(find_onset(signal.values, p, options.onset_fraction, options.onset_neighborhood, lower));
        lower = p + 1;
    }
    if (!out.onsets.empty()) out.profiles = split_profiles(signal, out.onsets);
    return out;
}

}  // namespace glissade::segmentation
