#include <doctest.h>

#include "glissade/error.hpp"
#include "glissade/pipeline.hpp"
#include "glissade/synth.hpp"

using namespace glissade;

TEST_CASE("detected saccade count matches the ground truth on noiseless records") {
    synth::SynthConfig cfg;
    cfg.seed = 31;
    auto corpus = synth::synth_corpus(cfg, 30);
    PipelineConfig pc;
    for (const auto& r : corpus) {
        auto seg = segmentation::segment(preprocess::velocity_signal(r.record, pc.preprocess), pc.segment);
        CHECK(seg.peaks.size() == r.truth.saccades.size());
    }
}

TEST_CASE("rule labels agree with the ground truth on noiseless records") {
    synth::SynthConfig cfg;
    cfg.seed = 32;
    auto corpus = synth::synth_corpus(cfg, 40);
    PipelineConfig pc;
    std::size_t total = 0, agree = 0;
    for (const auto& r : corpus) {
        auto fits = fit_record(r.record, pc);
        REQUIRE(fits.size() == r.truth.saccades.size());
        for (std::size_t k = 0; k < fits.size(); ++k) {
            ++total;
            if (!fits[k].fit.converged) continue;
            bool rule = labeling::rule_classify(fits[k].fit.params, pc.bi_threshold) == labeling::Label::glissade;
            agree += rule == r.truth.saccades[k].glissade;
        }
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.9);
}

TEST_CASE("parallel fitting matches sequential fitting") {
    synth::SynthConfig cfg;
    cfg.seed = 33;
    cfg.noise_std_deg = 0.2;
    std::vector<io::EogRecord> records;
    for (auto& r : synth::synth_corpus(cfg, 6)) records.push_back(std::move(r.record));
    PipelineConfig pc;
    auto seq = fit_records(records, pc);
    pc.jobs = 3;
    auto par = fit_records(records, pc);
    REQUIRE(seq.size() == par.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(seq[i].id() == par[i].id());
        CHECK(seq[i].fit.params.to_array() == par[i].fit.params.to_array());
        CHECK(seq[i].fit.rmse == par[i].fit.rmse);
    }
    auto data = rule_dataset(seq, pc.bi_threshold);
    CHECK(data.size() <= seq.size());
    CHECK(seq.front().id() == "synth:rec_0000:0");
}

TEST_CASE("pipeline config validation") {
    PipelineConfig pc;
    CHECK_NOTHROW(pc.validate());
    pc.bi_threshold = 0;
    CHECK_THROWS_AS(pc.validate(), Error);
    pc = {};
    pc.preprocess.median_window = 4;
    CHECK_THROWS_AS(pc.validate(), Error);
    pc = {};
    pc.jobs = 0;
    CHECK_THROWS_AS(pc.validate(), Error);
}
