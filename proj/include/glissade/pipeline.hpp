#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "glissade/gauss_fit.hpp"
#include "glissade/labeling.hpp"
#include "glissade/ml.hpp"
#include "glissade/preprocess.hpp"
#include "glissade/segmentation.hpp"
#include "glissade/signal_io.hpp"

namespace glissade {

/// Every tunable of the record -> label chain.
struct PipelineConfig {
    preprocess::PreprocessOptions preprocess;
    segmentation::SegmentOptions segment;
    fit::InitOptions init;
    fit::FitOptions fit;
    double bi_threshold = 10.0;
    ml::ModelSpec model;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    /// Checks each field against its owning module. Errors: InvalidConfig.
    void validate() const;
};

struct ProfileFit {
    std::string subject;
    std::string test;
    std::size_t profile = 0;
    segmentation::VelocityProfile velocity;
    fit::FitResult fit;

    /// "subject:test:profile", the key used by annotation files.
    std::string id() const;
};

/// Fits every segmented profile of one velocity signal. Profiles too short to
/// fit (fewer than 9 samples) or with no positive sample are skipped.
std::vector<ProfileFit> fit_profiles(const std::string& subject, const std::string& test,
                                     const std::vector<segmentation::VelocityProfile>& profiles,
                                     const PipelineConfig& config);

/// Preprocess, segment and fit one record.
std::vector<ProfileFit> fit_record(const io::EogRecord& record, const PipelineConfig& config);

/// fit_record over many records on config.jobs threads; output keeps record order.
std::vector<ProfileFit> fit_records(const std::vector<io::EogRecord>& records, const PipelineConfig& config);

/// Rule-labelled samples for all converged fits.
labeling::Dataset rule_dataset(const std::vector<ProfileFit>& fits, double bi_threshold);

}  // namespace glissade
