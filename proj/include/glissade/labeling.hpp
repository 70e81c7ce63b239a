#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glissade/gauss_fit.hpp"

namespace glissade::labeling {

enum class Label : std::uint8_t { none = 0, glissade = 1 };

constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }
/// Errors: InvalidConfig for anything other than 0 or 1.
Label label_from_int(long long value);

struct BiDifferences {
    double d12 = 0.0;
    double d13 = 0.0;
    double d23 = 0.0;
};

BiDifferences bi_differences(const fit::Gauss3Params& params) noexcept;

/// Label::none iff all three pairwise centroid distances are below threshold.
/// Errors: NonPositiveThreshold.
Label rule_classify(const fit::Gauss3Params& params, double threshold);

/// [rmse, b1, b2, b3]
using Features = std::array<double, 4>;

struct LabeledSample {
    Features features{};
    Label label = Label::none;
    std::string provenance;
};

struct Dataset {
    std::vector<LabeledSample> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    std::size_t count(Label l) const noexcept;
    bool has_both_classes() const noexcept { return count(Label::none) > 0 && count(Label::glissade) > 0; }
};

struct RuleLabel {
    double threshold = 10.0;
};
struct ManualLabel {
    Label label = Label::none;
};
using LabelSource = std::variant<RuleLabel, ManualLabel>;

/// Features in fit order; errors: Unconverged.
LabeledSample build_sample(const fit::FitResult& fit, const LabelSource& source, std::string provenance = {});

struct DatasetSplit {
    Dataset train;
    Dataset holdout;
};

/// Shuffles with `seed`, sends round(fraction * n) samples to train and the rest
/// to holdout. Both parts keep the input's relative order.
/// Errors: EmptyInput, InvalidConfig (fraction outside (0, 1)).
DatasetSplit split_dataset(const Dataset& data, double split_fraction, std::uint64_t seed);

/// build_sample for every fit with its matching label, then split_dataset.
/// Errors: LengthMismatch, EmptyInput, Unconverged, InvalidConfig.
DatasetSplit build_dataset(std::span<const fit::FitResult> fits, std::span<const Label> labels,
                           std::span<const std::string> provenance, double split_fraction, std::uint64_t seed);

/// CSV with header `rmse,b1,b2,b3,label`.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);

/// Annotation sidecar `profile_id,label`.
using ManualLabels = std::map<std::string, Label>;
ManualLabels read_manual_labels(std::istream& in);
void write_manual_labels(std::ostream& out, std::span<const std::pair<std::string, Label>> labels);

}  // namespace glissade::labeling
