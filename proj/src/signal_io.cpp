#include "glissade/signal_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glissade/csv.hpp"
#include "glissade/error.hpp"

namespace glissade::io {

namespace {

double median_gap(const std::vector<double>& time) {
    std::vector<double> gaps(time.size() - 1);
    for (std::size_t i = 1; i < time.size(); ++i) gaps[i - 1] = time[i] - time[i - 1];
    const std::size_t mid = gaps.size() / 2;
    std::nth_element(gaps.begin(), gaps.begin() + mid, gaps.end());
    if (gaps.size() % 2 == 1) return gaps[mid];
    const double upper = gaps[mid];
    const double lower = *std::max_element(gaps.begin(), gaps.begin() + mid);
    return 0.5 * (lower + upper);
}

bool looks_like_header(const std::string& line) {
    const auto fields = csv::split(line);
    return !csv::parse_double(fields.front()).has_value();
}

}  // namespace

void EogRecord::validate() const {
    if (time.empty()) throw Error(Errc::EmptyInput, "record has no samples");
    if (horizontal.size() != time.size() || stimulus.size() != time.size())
        throw Error(Errc::LengthMismatch, "channels differ in length");
    if (!(sample_period_s > 0.0) || !std::isfinite(sample_period_s))
        throw Error(Errc::InvalidConfig, "sample period must be positive");
    for (std::size_t i = 1; i < time.size(); ++i)
        if (!(time[i] > time[i - 1])) throw Error(Errc::NonMonotonicTime, "time is not strictly increasing", i);
}

EogRecord parse_record(std::istream& in, const IngestConfig& config) {
    const auto lines = csv::read_lines(in);
    if (lines.empty()) throw Error(Errc::EmptyInput, "no input lines");

    std::size_t first = 0;
    switch (config.header) {
        case HeaderMode::Present: first = 1; break;
        case HeaderMode::Absent: first = 0; break;
        case HeaderMode::Auto: first = looks_like_header(lines.front()) ? 1 : 0; break;
    }
    if (first >= lines.size()) throw Error(Errc::EmptyInput, "header without data rows");

    EogRecord record;
    record.subject_id = config.subject_id;
    record.test_id = config.test_id;
    const std::size_t n = lines.size() - first;
    record.time.reserve(n);
    record.horizontal.reserve(n);
    record.stimulus.reserve(n);

    for (std::size_t row = first; row < lines.size(); ++row) {
        const auto fields = csv::split(lines[row]);
        if (fields.size() != 3)
            throw Error(Errc::MalformedRow, "expected 3 fields, got " + std::to_string(fields.size()), row);
        double values[3];
        for (std::size_t f = 0; f < 3; ++f) {
            const auto v = csv::parse_double(fields[f]);
            if (!v || !std::isfinite(*v))
                throw Error(Errc::MalformedRow, "non-numeric field '" + std::string(fields[f]) + "'", row);
            values[f] = *v;
        }
        const double t = values[0] / 1000.0;
        if (!record.time.empty() && !(t > record.time.back()))
            throw Error(Errc::NonMonotonicTime, "time is not strictly increasing", row);
        record.time.push_back(t);
        record.horizontal.push_back(values[1]);
        record.stimulus.push_back(values[2]);
    }

    record.sample_period_s = record.time.size() > 1 ? median_gap(record.time) : config.default_sample_period_s;
    if (config.stimulus_amplitude_deg) {
        record.stimulus_amplitude_deg = *config.stimulus_amplitude_deg;
    } else {
        const auto [lo, hi] = std::minmax_element(record.stimulus.begin(), record.stimulus.end());
        record.stimulus_amplitude_deg = *hi - *lo;
    }
    record.validate();
    return record;
}

EogRecord parse_record(std::string_view text, const IngestConfig& config) {
    std::istringstream in{std::string(text)};
    return parse_record(in, config);
}

void write_record(std::ostream& out, const EogRecord& record, const SerializeOptions& options) {
    if (options.header) out << kRecordHeader << '\n';
    for (std::size_t i = 0; i < record.size(); ++i) {
        // Millisecond timestamps are written at nanosecond resolution so that
        // sample grids like 5, 10, 15 ms print without binary noise.
        const double ms = std::round(record.time[i] * 1e12) / 1e9;
        out << csv::format_double(ms) << ',' << csv::format_double(record.horizontal[i]) << ','
            << csv::format_double(record.stimulus[i]) << '\n';
    }
}

std::string serialize_record(const EogRecord& record, const SerializeOptions& options) {
    std::ostringstream out;
    write_record(out, record, options);
    return out.str();
}

EogRecord read_record_file(const std::filesystem::path& path, IngestConfig config) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    if (config.test_id.empty()) config.test_id = path.stem().string();
    if (config.subject_id.empty()) {
        const auto parent = path.parent_path().filename().string();
        config.subject_id = parent.empty() ? "subject" : parent;
    }
    try {
        return parse_record(in, config);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message(), e.row());
    }
}

Study load_study(const std::filesystem::path& directory, const IngestConfig& config) {
    if (!std::filesystem::is_directory(directory))
        throw Error(Errc::Io, "not a directory: '" + directory.string() + "'");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(Errc::EmptyInput, "no .csv records in '" + directory.string() + "'");
    Study study;
    study.metadata["directory"] = directory.string();
    for (const auto& f : files) study.records.push_back(read_record_file(f, config));
    return study;
}

}  // namespace glissade::io
