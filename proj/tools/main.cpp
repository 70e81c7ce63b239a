#include <exception>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "glissade/error.hpp"

using namespace glissade;
using namespace glissade::cli;

namespace {

struct Flags {
    std::optional<double> step_override_ms;
    std::optional<std::size_t> max_depth;
    bool no_bootstrap = false;
    std::string model = "forest";
    std::string header = "auto";
};

void add_global_options(CLI::App& app, Settings& s, Flags& f) {
    auto& p = s.pipeline;
    app.add_option("--seed", p.seed, "Seed for every random choice (synthesis, splits, folds, forests)")
        ->capture_default_str();
    app.add_option("--jobs", p.jobs, "Worker threads for corpus-level stages")->capture_default_str();
    app.add_option("--header", f.header, "Record header handling")
        ->check(CLI::IsMember({"auto", "present", "absent"}))
        ->capture_default_str();

    app.add_option("--median-window", p.preprocess.median_window, "Median filter window (odd)")
        ->capture_default_str();
    app.add_option("--step-override-ms", f.step_override_ms,
                   "Differentiator step in ms instead of the record's own sample period");

    app.add_option("--min-peak-height", p.segment.min_peak_height, "Minimum saccadic peak velocity (deg/s)")
        ->capture_default_str();
    app.add_option("--min-peak-distance", p.segment.min_peak_distance, "Minimum samples between peaks")
        ->capture_default_str();
    app.add_option("--onset-fraction", p.segment.onset_fraction, "Onset level as a fraction of the peak")
        ->capture_default_str();
    app.add_option("--onset-neighborhood", p.segment.onset_neighborhood, "Samples searched around the onset")
        ->capture_default_str();

    app.add_option("--max-iter", p.fit.max_iter, "Fit iteration limit")->capture_default_str();
    app.add_option("--fit-tol", p.fit.tol, "Relative RMSE change that ends a fit")->capture_default_str();
    app.add_option("--bi-threshold", p.bi_threshold, "Centroid distance (samples) that marks a glissade")
        ->capture_default_str();

    app.add_option("--model", f.model, "Classifier for train")
        ->check(CLI::IsMember({"knn", "cart", "forest"}))
        ->capture_default_str();
    app.add_option("--knn-k", p.model.knn_k, "Neighbours for knn")->capture_default_str();
    app.add_option("--max-depth", f.max_depth, "Tree depth limit (unlimited by default)");
    app.add_option("--min-leaf", p.model.cart_min_leaf, "Minimum samples per tree leaf")->capture_default_str();
    app.add_option("--trees", p.model.forest_trees, "Trees in a forest")->capture_default_str();
    app.add_option("--features-per-split", p.model.forest_features_per_split, "Candidate features per forest split")
        ->capture_default_str();
    app.add_flag("--no-bootstrap", f.no_bootstrap, "Grow forest trees on the full training set");

    app.add_option("--folds", s.folds, "Cross-validation folds")->capture_default_str();
    app.add_option("--repeats", s.repeats, "Cross-validation repeats")->capture_default_str();
}

void finish_settings(Settings& s, const Flags& f) {
    if (f.step_override_ms) s.pipeline.preprocess.step_override_s = *f.step_override_ms / 1000.0;
    s.pipeline.model.cart_max_depth = f.max_depth;
    s.pipeline.model.forest_bootstrap = !f.no_bootstrap;
    s.pipeline.model.kind = ml::parse_model_kind(f.model);
    static const std::map<std::string, io::HeaderMode> headers{
        {"auto", io::HeaderMode::Auto}, {"present", io::HeaderMode::Present}, {"absent", io::HeaderMode::Absent}};
    s.header = headers.at(f.header);
    s.pipeline.validate();
    if (s.folds < 2) throw Error(Errc::InvalidConfig, "--folds must be >= 2");
    if (s.repeats < 1) throw Error(Errc::InvalidConfig, "--repeats must be >= 1");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saccade glissade detection: EOG velocity profiles, gauss3 fits and classifiers", "glissade"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file of global options (command-line flags take precedence)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Settings settings;
    Flags flags;
    add_global_options(app, settings, flags);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled corpus");
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--records", synth_args.records, "Number of records")->capture_default_str();
    synth->add_option("--saccades", synth_args.config.n_saccades, "Saccades per record")->capture_default_str();
    synth->add_option("--amplitude", synth_args.config.amplitude_deg, "Saccade amplitude (deg)")
        ->capture_default_str();
    synth->add_option("--sample-rate", synth_args.config.sample_rate_hz, "Sample rate (Hz)")->capture_default_str();
    synth->add_option("--glissade-probability", synth_args.config.glissade_probability,
                      "Probability that a saccade carries a glissade")
        ->capture_default_str();
    synth->add_option("--noise", synth_args.config.noise_std_deg, "Gaussian position noise (deg)")
        ->capture_default_str();

    PreprocessArgs pre_args;
    auto* pre = app.add_subcommand("preprocess", "Median filter, differentiate and rectify records");
    pre->add_option("inputs", pre_args.inputs, "Record files or directories of records")->required();
    pre->add_option("-o,--out", pre_args.out, "Velocity CSV")->capture_default_str();

    SegmentArgs seg_args;
    auto* seg = app.add_subcommand("segment", "Split velocity signals into saccade profiles");
    seg->add_option("input", seg_args.input, "Velocity CSV from preprocess")->required();
    seg->add_option("-o,--out", seg_args.out, "Profiles CSV")->capture_default_str();

    FitArgs fit_args;
    auto* fit = app.add_subcommand("fit", "Fit the three-gaussian model to every profile");
    fit->add_option("input", fit_args.input, "Profiles CSV from segment")->required();
    fit->add_option("-o,--out", fit_args.out, "Fits CSV")->capture_default_str();
    fit->add_option("--json", fit_args.json, "Also write the fits as JSON");

    LabelArgs label_args;
    auto* label = app.add_subcommand("label", "Build the classifier dataset from fits");
    label->add_option("input", label_args.input, "Fits CSV from fit")->required();
    label->add_option("-o,--out", label_args.out, "Dataset CSV (training part with --split)")->capture_default_str();
    label->add_option("--manual", label_args.manual, "profile_id,label file overriding rule labels");
    label->add_option("--labels-out", label_args.labels_out, "Write the assigned profile_id,label pairs");
    label->add_option("--split", label_args.split, "Fraction of samples sent to --out");
    label->add_option("--holdout", label_args.holdout, "Dataset CSV for the remaining samples");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a classifier on a dataset");
    train->add_option("input", train_args.input, "Dataset CSV")->required();
    train->add_option("-o,--out", train_args.out, "Model JSON")->capture_default_str();

    EvaluateArgs eval_args;
    auto* eval = app.add_subcommand("evaluate", "Repeated k-fold cross-validation of classifiers");
    eval->add_option("input", eval_args.input, "Dataset CSV")->required();
    eval->add_option("--models", eval_args.models, "forest, cart, knn, knn:K or knn:sweep")
        ->delimiter(',')
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
        ->capture_default_str();
    eval->add_option("--knn-sweep", eval_args.knn_sweep, "Also evaluate knn for k = 1..K");
    eval->add_option("-o,--out", eval_args.out, "Report")->capture_default_str();
    eval->add_option("--folds-out", eval_args.folds_out, "Per-fold scores CSV");

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Label fitted profiles with a trained model");
    predict->add_option("model", predict_args.model, "Model JSON from train")->required();
    predict->add_option("input", predict_args.input, "Fits CSV")->required();
    predict->add_option("-o,--out", predict_args.out, "Labels CSV")->capture_default_str();

    ExportArgs export_args;
    auto* exporter = app.add_subcommand("export-plot", "Write plot-ready columns");
    exporter->add_option("kind", export_args.kind, "velocity, peaks, onsets, fit or scores")->required();
    exporter->add_option("input", export_args.input,
                         "velocity: velocity CSV; peaks/onsets/fit: profiles CSV; scores: --folds-out CSV")
        ->required();
    exporter->add_option("-o,--out", export_args.out, "Output CSV")->capture_default_str();
    exporter->add_option("--fits", export_args.fits, "Fits CSV (fit kind)");
    exporter->add_option("--id", export_args.id, "subject:test record, or subject:test:profile for fit");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        finish_settings(settings, flags);
        if (*synth) cmd_synth(settings, synth_args);
        if (*pre) cmd_preprocess(settings, pre_args);
        if (*seg) cmd_segment(settings, seg_args);
        if (*fit) cmd_fit(settings, fit_args);
        if (*label) cmd_label(settings, label_args);
        if (*train) cmd_train(settings, train_args);
        if (*eval) cmd_evaluate(settings, eval_args);
        if (*predict) cmd_predict(settings, predict_args);
        if (*exporter) cmd_export_plot(settings, export_args);
    } catch (const Error& e) {
        std::cerr << "glissade: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "glissade: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
