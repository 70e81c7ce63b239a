#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glissade::io {

/// One captured saccadic test: a horizontal gaze channel and the stimulus
/// channel on a shared time base. Time is stored in seconds, angles in degrees.
struct EogRecord {
    double sample_period_s = 0.005;
    std::vector<double> time;
    std::vector<double> horizontal;
    std::vector<double> stimulus;
    double stimulus_amplitude_deg = 0.0;
    std::string subject_id;
    std::string test_id;

    std::size_t size() const noexcept { return time.size(); }

    /// Throws Error(EmptyInput / LengthMismatch / NonMonotonicTime / InvalidConfig)
    /// when an invariant does not hold.
    void validate() const;
};

struct Study {
    std::vector<EogRecord> records;
    std::map<std::string, std::string> metadata;
};

enum class HeaderMode { Auto, Present, Absent };

struct IngestConfig {
    HeaderMode header = HeaderMode::Auto;
    std::string subject_id;
    std::string test_id;
    // Used only when the input holds a single sample.
    double default_sample_period_s = 0.005;
    // Otherwise the peak-to-peak range of the stimulus channel.
    std::optional<double> stimulus_amplitude_deg;
};

/// Column order of the record CSV: time_ms, horizontal_deg, stimulus_deg.
inline constexpr std::string_view kRecordHeader = "time_ms,horizontal_deg,stimulus_deg";

/// Parses a record body. The sample period is the median gap between timestamps.
/// Errors: EmptyInput, MalformedRow (with row index), NonMonotonicTime.
EogRecord parse_record(std::istream& in, const IngestConfig& config = {});
EogRecord parse_record(std::string_view text, const IngestConfig& config = {});

struct SerializeOptions {
    bool header = true;
};

void write_record(std::ostream& out, const EogRecord& record, const SerializeOptions& options = {});
std::string serialize_record(const EogRecord& record, const SerializeOptions& options = {});

/// Reads one record file. Unless set in `config`, test_id defaults to the file
/// stem and subject_id to the parent directory name.
EogRecord read_record_file(const std::filesystem::path& path, IngestConfig config = {});

/// Every *.csv file in a directory, in lexicographic path order.
Study load_study(const std::filesystem::path& directory, const IngestConfig& config = {});

}  // namespace glissade::io
