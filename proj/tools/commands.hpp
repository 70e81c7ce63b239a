#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glissade/pipeline.hpp"
#include "glissade/signal_io.hpp"
#include "glissade/synth.hpp"

namespace glissade::cli {

namespace fs = std::filesystem;

/// Flags shared by every command; also settable from the --config file.
struct Settings {
    PipelineConfig pipeline;
    io::HeaderMode header = io::HeaderMode::Auto;
    std::size_t folds = 10;
    std::size_t repeats = 10;
};

// Output targets of "-" go to stdout.

struct SynthArgs {
    fs::path out_dir;
    std::size_t records = 10;
    synth::SynthConfig config;
};

struct PreprocessArgs {
    std::vector<fs::path> inputs;
    std::string out = "-";
};

struct SegmentArgs {
    fs::path input;
    std::string out = "-";
};

struct FitArgs {
    fs::path input;
    std::string out = "-";
    std::optional<std::string> json;
};

struct LabelArgs {
    fs::path input;
    std::string out = "-";
    std::optional<fs::path> manual;
    std::optional<std::string> labels_out;
    std::optional<double> split;
    std::optional<std::string> holdout;
};

struct TrainArgs {
    fs::path input;
    std::string out = "-";
};

struct EvaluateArgs {
    fs::path input;
    std::vector<std::string> models{"forest", "cart", "knn"};
    std::optional<std::size_t> knn_sweep;
    std::string out = "-";
    std::optional<std::string> folds_out;
};

struct PredictArgs {
    fs::path model;
    fs::path input;
    std::string out = "-";
};

struct ExportArgs {
    std::string kind;
    fs::path input;
    std::string out = "-";
    std::optional<fs::path> fits;
    std::optional<std::string> id;
};

void cmd_synth(const Settings& settings, const SynthArgs& args);
void cmd_preprocess(const Settings& settings, const PreprocessArgs& args);
void cmd_segment(const Settings& settings, const SegmentArgs& args);
void cmd_fit(const Settings& settings, const FitArgs& args);
void cmd_label(const Settings& settings, const LabelArgs& args);
void cmd_train(const Settings& settings, const TrainArgs& args);
void cmd_evaluate(const Settings& settings, const EvaluateArgs& args);
void cmd_predict(const Settings& settings, const PredictArgs& args);
void cmd_export_plot(const Settings& settings, const ExportArgs& args);

}  // namespace glissade::cli
