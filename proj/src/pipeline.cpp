#include "glissade/pipeline.hpp"

#include <algorithm>

#include "glissade/error.hpp"
#include "glissade/parallel.hpp"

namespace glissade {

void PipelineConfig::validate() const {
    preprocess.validate();
    segment.validate();
    fit.validate();
    model.validate();
    if (!(init.secondary_min_fraction >= 0.0 && init.secondary_min_fraction < 1.0))
        throw Error(Errc::InvalidConfig, "secondary_min_fraction must lie in [0, 1)");
    if (!(bi_threshold > 0.0)) throw Error(Errc::InvalidConfig, "bi threshold must be positive");
    if (jobs < 1) throw Error(Errc::InvalidConfig, "jobs must be >= 1");
}

std::string ProfileFit::id() const { return subject + ":" + test + ":" + std::to_string(profile); }

std::vector<ProfileFit> fit_profiles(const std::string& subject, const std::string& test,
                                     const std::vector<segmentation::VelocityProfile>& profiles,
                                     const PipelineConfig& config) {
    std::vector<ProfileFit> out;
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const auto& p = profiles[k];
        if (p.values.size() < 9) continue;
        if (!(*std::max_element(p.values.begin(), p.values.end()) > 0.0)) continue;
        ProfileFit pf;
        pf.subject = subject;
        pf.test = test;
        pf.profile = k;
        pf.velocity = p;
        pf.fit = fit::fit_gauss3(p.values, fit::initial_guess(p.values, config.init), config.fit);
        out.push_back(std::move(pf));
    }
    return out;
}

std::vector<ProfileFit> fit_record(const io::EogRecord& record, const PipelineConfig& config) {
    const auto velocity = preprocess::velocity_signal(record, config.preprocess);
    const auto seg = segmentation::segment(velocity, config.segment);
    return fit_profiles(record.subject_id, record.test_id, seg.profiles, config);
}

std::vector<ProfileFit> fit_records(const std::vector<io::EogRecord>& records, const PipelineConfig& config) {
    std::vector<std::vector<ProfileFit>> per_record(records.size());
    parallel_for(records.size(), config.jobs, [&](std::size_t i) { per_record[i] = fit_record(records[i], config); });
    std::vector<ProfileFit> out;
    for (auto& r : per_record) std::move(r.begin(), r.end(), std::back_inserter(out));
    return out;
}

labeling::Dataset rule_dataset(const std::vector<ProfileFit>& fits, double bi_threshold) {
    labeling::Dataset data;
    for (const auto& f : fits) {
        if (!f.fit.converged) continue;
        data.samples.push_back(labeling::build_sample(f.fit, labeling::RuleLabel{bi_threshold}, f.id()));
    }
    return data;
}

}  // namespace glissade
