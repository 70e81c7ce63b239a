#include "glissade/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "glissade/csv.hpp"
#include "glissade/error.hpp"
#include "glissade/random.hpp"

namespace glissade::synth {

namespace {

void check_range(const Range& r, const char* name, bool allow_zero = false) {
    const bool ok = std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi && (allow_zero ? r.lo >= 0.0 : r.lo > 0.0);
    if (!ok) throw Error(Errc::InvalidConfig, std::string(name) + " must be a positive range with lo <= hi");
}

double uniform(Rng& rng, const Range& r) {
    if (r.lo == r.hi) return r.lo;
    return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

double step(double t, double center, double width) { return 0.5 * (1.0 + std::erf((t - center) / width)); }

struct Saccade {
    double peak_s = 0.0;
    double width_s = 0.0;
    double main_amplitude = 0.0;
    bool glissade = false;
    double glissade_peak_s = 0.0;
    double glissade_width_s = 0.0;
    double glissade_amplitude = 0.0;
};

}  // namespace

void SynthConfig::validate() const {
    if (n_saccades < 1) throw Error(Errc::InvalidConfig, "n_saccades must be >= 1");
    if (!(amplitude_deg > 0.0)) throw Error(Errc::InvalidConfig, "amplitude must be positive");
    if (!(sample_rate_hz > 0.0)) throw Error(Errc::InvalidConfig, "sample rate must be positive");
    if (!(glissade_probability >= 0.0 && glissade_probability <= 1.0))
        throw Error(Errc::InvalidConfig, "glissade probability must lie in [0, 1]");
    check_range(glissade_delay_ms, "glissade_delay_ms");
    check_range(glissade_amplitude_ratio, "glissade_amplitude_ratio");
    check_range(glissade_width_ratio, "glissade_width_ratio");
    check_range(fixation_ms, "fixation_ms");
    check_range(latency_ms, "latency_ms", true);
    if (!(noise_std_deg >= 0.0)) throw Error(Errc::InvalidConfig, "noise std must be >= 0");
    if (!(velocity_per_deg > 0.0)) throw Error(Errc::InvalidConfig, "velocity_per_deg must be positive");
    if (!(lead_ms >= 0.0)) throw Error(Errc::InvalidConfig, "lead_ms must be >= 0");
    if (latency_ms.hi + glissade_delay_ms.hi >= fixation_ms.lo)
        throw Error(Errc::InvalidConfig, "latency plus glissade delay must fit inside one fixation interval");
}

SynthRecord synth_record(const SynthConfig& config) {
    config.validate();
    Rng rng(derive_seed(config.seed, {0xe06}));
    const double h = 1.0 / config.sample_rate_hz;
    const double amp = config.amplitude_deg;
    // A gaussian pulse V exp(-(t/w)^2) covers V w sqrt(pi) degrees.
    const double width = 1.0 / (config.velocity_per_deg * std::sqrt(std::numbers::pi));

    std::vector<double> stim_times;
    std::vector<Saccade> saccades;
    double t_stim = config.lead_ms / 1000.0;
    std::bernoulli_distribution coin(config.glissade_probability);
    for (std::size_t k = 0; k < config.n_saccades; ++k) {
        Saccade s;
        s.peak_s = t_stim + uniform(rng, config.latency_ms) / 1000.0;
        s.width_s = width;
        s.glissade = coin(rng);
        // Draw the glissade shape unconditionally so the stream layout does not
        // depend on the coin flips.
        const double delay = uniform(rng, config.glissade_delay_ms) / 1000.0;
        const double ratio = uniform(rng, config.glissade_amplitude_ratio);
        const double wratio = uniform(rng, config.glissade_width_ratio);
        if (s.glissade) {
            s.glissade_peak_s = s.peak_s + delay;
            s.glissade_width_s = wratio * width;
            const double main_peak = amp / (std::sqrt(std::numbers::pi) * (width + ratio * s.glissade_width_s));
            s.main_amplitude = main_peak * width * std::sqrt(std::numbers::pi);
            s.glissade_amplitude = amp - s.main_amplitude;
        } else {
            s.main_amplitude = amp;
        }
        saccades.push_back(s);
        stim_times.push_back(t_stim);
        t_stim += uniform(rng, config.fixation_ms) / 1000.0;
    }

    const auto n = static_cast<std::size_t>(std::ceil(t_stim / h));
    SynthRecord out;
    auto& rec = out.record;
    rec.sample_period_s = h;
    rec.stimulus_amplitude_deg = amp;
    rec.subject_id = "synth";
    rec.test_id = "rec";
    rec.time.resize(n);
    rec.horizontal.assign(n, 0.0);
    rec.stimulus.assign(n, 0.0);

    std::normal_distribution<double> noise(0.0, config.noise_std_deg > 0.0 ? config.noise_std_deg : 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h;
        rec.time[i] = t;
        double pos = 0.0;
        for (std::size_t k = 0; k < saccades.size(); ++k) {
            const auto& s = saccades[k];
            const double dir = k % 2 == 0 ? 1.0 : -1.0;
            double moved = s.main_amplitude * step(t, s.peak_s, s.width_s);
            if (s.glissade) moved += s.glissade_amplitude * step(t, s.glissade_peak_s, s.glissade_width_s);
            pos += dir * moved;
        }
        std::size_t steps = 0;
        while (steps < stim_times.size() && t >= stim_times[steps]) ++steps;
        rec.stimulus[i] = steps % 2 == 1 ? amp : 0.0;
        rec.horizontal[i] = config.noise_std_deg > 0.0 ? pos + noise(rng) : pos;
    }

    for (const auto& s : saccades) {
        SaccadeTruth truth;
        truth.peak = static_cast<std::size_t>(std::lround(s.peak_s / h));
        truth.onset = static_cast<std::size_t>(std::floor((s.peak_s - 2.0 * s.width_s) / h)) + 1;
        truth.glissade = s.glissade;
        if (s.glissade) truth.glissade_peak = static_cast<std::size_t>(std::lround(s.glissade_peak_s / h));
        out.truth.saccades.push_back(truth);
    }
    return out;
}

std::vector<SynthRecord> synth_corpus(const SynthConfig& config, std::size_t n_records) {
    if (n_records < 1) throw Error(Errc::InvalidConfig, "n_records must be >= 1");
    config.validate();
    std::vector<SynthRecord> corpus;
    corpus.reserve(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
        SynthConfig c = config;
        c.seed = derive_seed(config.seed, {i});
        auto r = synth_record(c);
        char name[32];
        std::snprintf(name, sizeof name, "rec_%04zu", i);
        r.record.test_id = name;
        corpus.push_back(std::move(r));
    }
    return corpus;
}

void write_ground_truth(std::ostream& out, std::span<const SynthRecord> corpus) {
    out << "subject,test,saccade,onset,peak,glissade,glissade_peak\n";
    for (const auto& r : corpus) {
        for (std::size_t k = 0; k < r.truth.saccades.size(); ++k) {
            const auto& s = r.truth.saccades[k];
            out << r.record.subject_id << ',' << r.record.test_id << ',' << k << ',' << s.onset << ',' << s.peak << ','
                << (s.glissade ? 1 : 0) << ',';
            if (s.glissade_peak) out << *s.glissade_peak;
            out << '\n';
        }
    }
}

std::vector<GroundTruthRow> read_ground_truth(std::istream& in) {
    const auto table = csv::read_table(in);
    const auto c_subject = table.column("subject"), c_test = table.column("test"), c_sacc = table.column("saccade"),
               c_onset = table.column("onset"), c_peak = table.column("peak"), c_gl = table.column("glissade"),
               c_glp = table.column("glissade_peak");
    std::vector<GroundTruthRow> rows;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto num = [&](std::size_t col) {
            const auto v = csv::parse_int(row[col]);
            if (!v || *v < 0) throw Error(Errc::MalformedRow, "expected a non-negative integer", r + 1);
            return static_cast<std::size_t>(*v);
        };
        GroundTruthRow g;
        g.subject = row[c_subject];
        g.test = row[c_test];
        g.saccade = num(c_sacc);
        g.truth.onset = num(c_onset);
        g.truth.peak = num(c_peak);
        g.truth.glissade = num(c_gl) != 0;
        if (!row[c_glp].empty()) g.truth.glissade_peak = num(c_glp);
        rows.push_back(std::move(g));
    }
    return rows;
}

}  // namespace glissade::synth
