#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "glissade/signal_io.hpp"

namespace glissade::synth {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

/// Generator settings. Each saccade is an erf-shaped position step whose
/// velocity is a gaussian pulse with peak velocity_per_deg * amplitude; a
/// glissade is a second, delayed gaussian velocity pulse moving the same way,
/// with the main step shortened so the eye still lands on the target.
struct SynthConfig {
    std::size_t n_saccades = 5;
    double amplitude_deg = 20.0;
    double sample_rate_hz = 200.0;
    double glissade_probability = 0.5;
    Range glissade_delay_ms{70.0, 150.0};         // main peak to glissade peak
    Range glissade_amplitude_ratio{0.05, 0.3};    // glissade / saccade peak velocity
    Range glissade_width_ratio{0.7, 1.2};         // glissade / saccade pulse width
    double noise_std_deg = 0.0;
    std::uint64_t seed = 0;

    double velocity_per_deg = 30.0;               // main-sequence slope, 1/s
    Range fixation_ms{800.0, 1400.0};             // stimulus step to next stimulus step
    Range latency_ms{180.0, 250.0};               // stimulus step to saccade peak
    double lead_ms = 500.0;

    /// Errors: InvalidConfig.
    void validate() const;
};

struct SaccadeTruth {
    std::size_t onset = 0;  // first sample at which the main pulse exceeds exp(-4) of its peak
    std::size_t peak = 0;
    bool glissade = false;
    std::optional<std::size_t> glissade_peak;
};

struct GroundTruth {
    std::vector<SaccadeTruth> saccades;
};

struct SynthRecord {
    io::EogRecord record;
    GroundTruth truth;
};

/// Deterministic in config.seed. The subject id is "synth", the test id "rec".
SynthRecord synth_record(const SynthConfig& config);

/// Record i uses a seed derived from (config.seed, i) and the test id "rec_%04d".
/// Errors: InvalidConfig (also for n_records == 0).
std::vector<SynthRecord> synth_corpus(const SynthConfig& config, std::size_t n_records);

/// Sidecar `subject,test,saccade,onset,peak,glissade,glissade_peak`; the last
/// field is empty without a glissade.
void write_ground_truth(std::ostream& out, std::span<const SynthRecord> corpus);

struct GroundTruthRow {
    std::string subject;
    std::string test;
    std::size_t saccade = 0;
    SaccadeTruth truth;
};
std::vector<GroundTruthRow> read_ground_truth(std::istream& in);

}  // namespace glissade::synth
