#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "glissade/csv.hpp"
#include "glissade/error.hpp"
#include "glissade/parallel.hpp"

namespace glissade::cli {

namespace {

using csv::format_double;

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    return in;
}

csv::Table read_table_file(const fs::path& path) {
    auto in = open_input(path);
    try {
        return csv::read_table(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message(), e.row());
    }
}

void write_output(const std::string& target, const std::string& content) {
    if (target == "-") {
        std::cout << content << std::flush;
        return;
    }
    const fs::path path(target);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + target);
    out << content;
    if (!out.flush()) throw Error(Errc::Io, "cannot write " + target);
}

std::size_t column(const csv::Table& t, const fs::path& path, std::string_view name) {
    try {
        return t.column(name);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message(), e.row());
    }
}

// Field accessors report the file line (header = line 0).
double get_double(const csv::Table& t, std::size_t r, std::size_t c) {
    auto v = csv::parse_double(t.rows[r][c]);
    if (!v) throw Error(Errc::MalformedRow, "column '" + t.header[c] + "' is not a number", r + 1);
    return *v;
}

std::size_t get_index(const csv::Table& t, std::size_t r, std::size_t c) {
    auto v = csv::parse_int(t.rows[r][c]);
    if (!v || *v < 0)
        throw Error(Errc::MalformedRow, "column '" + t.header[c] + "' is not a non-negative integer", r + 1);
    return static_cast<std::size_t>(*v);
}

std::string ms_text(double seconds) { return format_double(std::round(seconds * 1e9) / 1e6); }

double median_gap_s(const std::vector<double>& time_ms, double fallback) {
    if (time_ms.size() < 2) return fallback;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < time_ms.size(); ++i) gaps.push_back(time_ms[i] - time_ms[i - 1]);
    auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
    std::nth_element(gaps.begin(), mid, gaps.end());
    double m = *mid;
    if (gaps.size() % 2 == 0) m = 0.5 * (m + *std::max_element(gaps.begin(), mid));
    return m / 1000.0;
}

// ---- velocity files ------------------------------------------------------

struct VelocityRecord {
    std::string subject;
    std::string test;
    std::vector<double> time_ms;
    std::vector<double> values;
};

std::vector<VelocityRecord> read_velocity(const fs::path& path) {
    const auto t = read_table_file(path);
    const std::size_t cs = column(t, path, "subject"), ct = column(t, path, "test");
    const std::size_t ci = column(t, path, "index"), cm = column(t, path, "time_ms");
    const std::size_t cv = column(t, path, "velocity_deg_s");
    std::vector<VelocityRecord> out;
    std::map<std::pair<std::string, std::string>, std::size_t> where;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto key = std::make_pair(row[cs], row[ct]);
        auto [it, fresh] = where.try_emplace(key, out.size());
        if (fresh) out.push_back({row[cs], row[ct], {}, {}});
        auto& rec = out[it->second];
        if (get_index(t, r, ci) != rec.values.size())
            throw Error(Errc::MalformedRow, path.string() + ": sample indices must run 0, 1, 2, ... per record", r + 1);
        rec.time_ms.push_back(get_double(t, r, cm));
        rec.values.push_back(get_double(t, r, cv));
    }
    if (out.empty()) throw Error(Errc::EmptyInput, path.string() + ": no samples");
    return out;
}

// ---- profile files -------------------------------------------------------

struct ProfileRecord {
    std::string subject;
    std::string test;
    std::vector<segmentation::VelocityProfile> profiles;
};

std::vector<ProfileRecord> read_profiles(const fs::path& path) {
    const auto t = read_table_file(path);
    const std::size_t cs = column(t, path, "subject"), ct = column(t, path, "test");
    const std::size_t cp = column(t, path, "profile"), co = column(t, path, "offset");
    const std::size_t cst = column(t, path, "start_index"), cpk = column(t, path, "peak_index");
    const std::size_t cv = column(t, path, "velocity_deg_s");
    std::vector<ProfileRecord> out;
    std::map<std::pair<std::string, std::string>, std::size_t> where;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        auto [it, fresh] = where.try_emplace(std::make_pair(row[cs], row[ct]), out.size());
        if (fresh) out.push_back({row[cs], row[ct], {}});
        auto& rec = out[it->second];
        const std::size_t k = get_index(t, r, cp);
        const std::size_t offset = get_index(t, r, co);
        if (k == rec.profiles.size() && offset == 0) {
            segmentation::VelocityProfile p;
            p.start_index = get_index(t, r, cst);
            p.peak_index = get_index(t, r, cpk);
            rec.profiles.push_back(std::move(p));
        } else if (rec.profiles.empty() || k + 1 != rec.profiles.size() ||
                   offset != rec.profiles.back().values.size()) {
            throw Error(Errc::MalformedRow,
                        path.string() + ": profiles must be numbered 0, 1, ... with offsets 0, 1, ... each", r + 1);
        }
        rec.profiles.back().values.push_back(get_double(t, r, cv));
    }
    if (out.empty()) throw Error(Errc::EmptyInput, path.string() + ": no profiles");
    return out;
}

// ---- fit files -----------------------------------------------------------

const char* const kFitHeader = "subject,test,profile,a1,a2,a3,b1,b2,b3,c1,c2,c3,rmse,iterations,converged";

struct FitRow {
    std::string subject;
    std::string test;
    std::size_t profile = 0;
    fit::FitResult fit;

    std::string id() const { return subject + ":" + test + ":" + std::to_string(profile); }
};

std::vector<FitRow> read_fits(const fs::path& path) {
    const auto t = read_table_file(path);
    const std::size_t cs = column(t, path, "subject"), ct = column(t, path, "test");
    const std::size_t cp = column(t, path, "profile"), cr = column(t, path, "rmse");
    const std::size_t ci = column(t, path, "iterations"), cc = column(t, path, "converged");
    std::array<std::size_t, 9> cols{};
    const char* names[9] = {"a1", "a2", "a3", "b1", "b2", "b3", "c1", "c2", "c3"};
    for (int i = 0; i < 9; ++i) cols[i] = column(t, path, names[i]);
    std::vector<FitRow> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        FitRow f;
        f.subject = t.rows[r][cs];
        f.test = t.rows[r][ct];
        f.profile = get_index(t, r, cp);
        std::array<double, 9> p{};
        for (int i = 0; i < 9; ++i) p[i] = get_double(t, r, cols[i]);
        f.fit.params = fit::Gauss3Params::from_array(p);
        f.fit.rmse = get_double(t, r, cr);
        f.fit.iterations = static_cast<int>(get_index(t, r, ci));
        const std::size_t conv = get_index(t, r, cc);
        if (conv > 1) throw Error(Errc::MalformedRow, "column 'converged' must be 0 or 1", r + 1);
        f.fit.converged = conv == 1;
        out.push_back(std::move(f));
    }
    return out;
}

labeling::Features features_of(const fit::FitResult& f) {
    return {f.rmse, f.params.b[0], f.params.b[1], f.params.b[2]};
}

// ---- evaluate helpers ----------------------------------------------------

struct NamedSpec {
    std::string name;
    ml::ModelSpec spec;
};

std::vector<NamedSpec> expand_models(const Settings& settings, const EvaluateArgs& args) {
    std::vector<NamedSpec> out;
    auto base = settings.pipeline.model;
    base.seed = settings.pipeline.seed;
    auto add_knn = [&](std::size_t k) {
        auto s = base;
        s.kind = ml::ModelKind::knn;
        s.knn_k = k;
        out.push_back({"knn:" + std::to_string(k), s});
    };
    for (const auto& m : args.models) {
        const auto colon = m.find(':');
        const auto kind = ml::parse_model_kind(m.substr(0, colon));
        if (colon == std::string::npos) {
            if (kind == ml::ModelKind::knn) {
                add_knn(base.knn_k);
            } else {
                auto s = base;
                s.kind = kind;
                out.push_back({m, s});
            }
            continue;
        }
        const std::string arg = m.substr(colon + 1);
        if (kind != ml::ModelKind::knn) throw Error(Errc::InvalidConfig, "only knn takes an argument: " + m);
        if (arg == "sweep") {
            for (std::size_t k = 1; k <= args.knn_sweep.value_or(15); ++k) add_knn(k);
        } else {
            auto k = csv::parse_int(arg);
            if (!k || *k < 1) throw Error(Errc::InvalidConfig, "bad neighbour count in " + m);
            add_knn(static_cast<std::size_t>(*k));
        }
    }
    if (args.knn_sweep && std::find(args.models.begin(), args.models.end(), "knn:sweep") == args.models.end())
        for (std::size_t k = 1; k <= *args.knn_sweep; ++k) add_knn(k);
    for (const auto& s : out) s.spec.validate();
    return out;
}

}  // namespace

void cmd_synth(const Settings& settings, const SynthArgs& args) {
    auto config = args.config;
    config.seed = settings.pipeline.seed;
    const auto corpus = synth::synth_corpus(config, args.records);
    for (const auto& r : corpus) {
        const auto path = args.out_dir / r.record.subject_id / (r.record.test_id + ".csv");
        write_output(path.string(), io::serialize_record(r.record));
    }
    std::ostringstream gt;
    synth::write_ground_truth(gt, corpus);
    write_output((args.out_dir / "ground_truth.csv").string(), gt.str());
}

void cmd_preprocess(const Settings& settings, const PreprocessArgs& args) {
    io::IngestConfig ingest;
    ingest.header = settings.header;
    std::vector<io::EogRecord> records;
    for (const auto& in : args.inputs) {
        if (!fs::exists(in)) throw Error(Errc::Io, "no such file or directory: " + in.string());
        if (fs::is_directory(in)) {
            auto study = io::load_study(in, ingest);
            if (study.records.empty()) throw Error(Errc::EmptyInput, "no .csv records in " + in.string());
            std::move(study.records.begin(), study.records.end(), std::back_inserter(records));
        } else {
            records.push_back(io::read_record_file(in, ingest));
        }
    }
    std::vector<preprocess::VelocitySignal> signals(records.size());
    parallel_for(records.size(), settings.pipeline.jobs, [&](std::size_t i) {
        try {
            signals[i] = preprocess::velocity_signal(records[i], settings.pipeline.preprocess);
        } catch (const Error& e) {
            throw Error(e.code(), records[i].subject_id + "/" + records[i].test_id + ": " + e.message(), e.row());
        }
    });

    std::ostringstream out;
    out << "subject,test,index,time_ms,velocity_deg_s\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        for (std::size_t k = 0; k < r.size(); ++k)
            out << r.subject_id << ',' << r.test_id << ',' << k << ',' << ms_text(r.time[k]) << ','
                << format_double(signals[i].values[k]) << '\n';
    }
    write_output(args.out, out.str());
}

void cmd_segment(const Settings& settings, const SegmentArgs& args) {
    const auto records = read_velocity(args.input);
    std::ostringstream out;
    out << "subject,test,profile,start_index,peak_index,offset,velocity_deg_s\n";
    for (const auto& r : records) {
        preprocess::VelocitySignal sig;
        sig.values = r.values;
        sig.sample_period_s = median_gap_s(r.time_ms, 0.005);
        const auto seg = segmentation::segment(sig, settings.pipeline.segment);
        for (std::size_t k = 0; k < seg.profiles.size(); ++k) {
            const auto& p = seg.profiles[k];
            for (std::size_t j = 0; j < p.values.size(); ++j)
                out << r.subject << ',' << r.test << ',' << k << ',' << p.start_index << ',' << seg.peaks[k] << ','
                    << j << ',' << format_double(p.values[j]) << '\n';
        }
    }
    write_output(args.out, out.str());
}

void cmd_fit(const Settings& settings, const FitArgs& args) {
    const auto records = read_profiles(args.input);
    std::vector<std::vector<ProfileFit>> fits(records.size());
    parallel_for(records.size(), settings.pipeline.jobs, [&](std::size_t i) {
        fits[i] = fit_profiles(records[i].subject, records[i].test, records[i].profiles, settings.pipeline);
    });

    std::ostringstream out;
    out << kFitHeader << '\n';
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& per_record : fits) {
        for (const auto& f : per_record) {
            out << f.subject << ',' << f.test << ',' << f.profile;
            for (double v : f.fit.params.to_array()) out << ',' << format_double(v);
            out << ',' << format_double(f.fit.rmse) << ',' << f.fit.iterations << ',' << (f.fit.converged ? 1 : 0)
                << '\n';
            if (args.json) {
                const auto& p = f.fit.params;
                doc.push_back({{"id", f.id()},
                               {"subject", f.subject},
                               {"test", f.test},
                               {"profile", f.profile},
                               {"start_index", f.velocity.start_index},
                               {"samples", f.velocity.values.size()},
                               {"a", p.a},
                               {"b", p.b},
                               {"c", p.c},
                               {"rmse", f.fit.rmse},
                               {"initial_rmse", f.fit.initial_rmse},
                               {"iterations", f.fit.iterations},
                               {"converged", f.fit.converged}});
            }
        }
    }
    write_output(args.out, out.str());
    if (args.json) write_output(*args.json, doc.dump(2) + "\n");
}

void cmd_label(const Settings& settings, const LabelArgs& args) {
    const auto fits = read_fits(args.input);
    labeling::ManualLabels manual;
    if (args.manual) {
        auto in = open_input(*args.manual);
        manual = labeling::read_manual_labels(in);
    }
    if (args.split && !args.holdout) throw Error(Errc::InvalidConfig, "--split needs --holdout for the held-out part");

    labeling::Dataset data;
    std::vector<std::pair<std::string, labeling::Label>> assigned;
    std::size_t skipped = 0;
    for (const auto& f : fits) {
        if (!f.fit.converged) {
            ++skipped;
            continue;
        }
        const auto id = f.id();
        labeling::LabelSource source = labeling::RuleLabel{settings.pipeline.bi_threshold};
        if (auto it = manual.find(id); it != manual.end()) source = labeling::ManualLabel{it->second};
        data.samples.push_back(labeling::build_sample(f.fit, source, id));
        assigned.emplace_back(id, data.samples.back().label);
    }
    if (skipped) std::cerr << "label: skipped " << skipped << " unconverged fit(s)\n";

    auto dump = [](const labeling::Dataset& d) {
        std::ostringstream s;
        labeling::write_dataset(s, d);
        return s.str();
    };
    if (args.split) {
        const auto parts = labeling::split_dataset(data, *args.split, settings.pipeline.seed);
        write_output(args.out, dump(parts.train));
        write_output(*args.holdout, dump(parts.holdout));
    } else {
        write_output(args.out, dump(data));
    }
    if (args.labels_out) {
        std::ostringstream s;
        labeling::write_manual_labels(s, assigned);
        write_output(*args.labels_out, s.str());
    }
}

void cmd_train(const Settings& settings, const TrainArgs& args) {
    auto in = open_input(args.input);
    const auto data = labeling::read_dataset(in);
    auto spec = settings.pipeline.model;
    spec.seed = settings.pipeline.seed;
    const auto model = ml::train(spec, data, settings.pipeline.jobs);
    std::ostringstream out;
    ml::save_model(out, model);
    write_output(args.out, out.str());
}

void cmd_evaluate(const Settings& settings, const EvaluateArgs& args) {
    auto in = open_input(args.input);
    const auto data = labeling::read_dataset(in);
    const auto specs = expand_models(settings, args);
    if (!data.has_both_classes()) throw Error(Errc::SingleClassData, "evaluation data holds a single class");

    std::ostringstream report, folds;
    folds << "spec,repeat,fold,accuracy\n";
    report << "samples=" << data.size() << " glissade=" << data.count(labeling::Label::glissade)
           << " folds=" << settings.folds << " repeats=" << settings.repeats << " seed=" << settings.pipeline.seed
           << '\n';
    for (const auto& s : specs) {
        const auto r = ml::cross_validate(s.spec, data, settings.folds, settings.repeats, settings.pipeline.seed,
                                          settings.pipeline.jobs);
        report << s.name << " mean=" << format_double(r.mean) << " std=" << format_double(r.std) << '\n';
        report << "  scores:";
        for (double x : r.fold_scores) report << ' ' << format_double(x);
        report << '\n';
        for (std::size_t i = 0; i < r.fold_scores.size(); ++i)
            folds << s.name << ',' << i / r.folds << ',' << i % r.folds << ',' << format_double(r.fold_scores[i])
                  << '\n';
    }
    write_output(args.out, report.str());
    if (args.folds_out) write_output(*args.folds_out, folds.str());
}

void cmd_predict(const Settings&, const PredictArgs& args) {
    auto in = open_input(args.model);
    const auto model = ml::load_model(in);
    const auto fits = read_fits(args.input);
    std::ostringstream out;
    out << "subject,test,profile,label\n";
    for (const auto& f : fits)
        out << f.subject << ',' << f.test << ',' << f.profile << ','
            << labeling::to_int(model.predict(features_of(f.fit))) << '\n';
    write_output(args.out, out.str());
}

void cmd_export_plot(const Settings&, const ExportArgs& args) {
    std::ostringstream out;
    const auto& kind = args.kind;
    if (kind == "velocity") {
        out << "subject,test,x,velocity\n";
        for (const auto& r : read_velocity(args.input)) {
            if (args.id && *args.id != r.subject + ":" + r.test) continue;
            for (std::size_t k = 0; k < r.values.size(); ++k)
                out << r.subject << ',' << r.test << ',' << format_double(r.time_ms[k]) << ','
                    << format_double(r.values[k]) << '\n';
        }
    } else if (kind == "peaks" || kind == "onsets") {
        out << "subject,test,profile,x,velocity\n";
        for (const auto& r : read_profiles(args.input)) {
            if (args.id && *args.id != r.subject + ":" + r.test) continue;
            for (std::size_t k = 0; k < r.profiles.size(); ++k) {
                const auto& p = r.profiles[k];
                const std::size_t x = kind == "peaks" ? p.peak_index : p.start_index;
                const std::size_t j = x - p.start_index;
                if (x < p.start_index || j >= p.values.size())
                    throw Error(Errc::MalformedRow, "peak outside its profile in " + args.input.string());
                out << r.subject << ',' << r.test << ',' << k << ',' << x << ',' << format_double(p.values[j]) << '\n';
            }
        }
    } else if (kind == "fit") {
        if (!args.fits) throw Error(Errc::InvalidConfig, "export-plot fit needs --fits");
        const auto fits = read_fits(*args.fits);
        if (fits.empty()) throw Error(Errc::EmptyInput, "no fits in " + args.fits->string());
        const FitRow* chosen = &fits.front();
        if (args.id) {
            auto it = std::find_if(fits.begin(), fits.end(), [&](const FitRow& f) { return f.id() == *args.id; });
            if (it == fits.end()) throw Error(Errc::InvalidConfig, "no fit for profile " + *args.id);
            chosen = &*it;
        }
        const segmentation::VelocityProfile* profile = nullptr;
        const auto records = read_profiles(args.input);
        for (const auto& r : records)
            if (r.subject == chosen->subject && r.test == chosen->test && chosen->profile < r.profiles.size())
                profile = &r.profiles[chosen->profile];
        if (!profile) throw Error(Errc::InvalidConfig, "no profile data for " + chosen->id());
        out << "x,observed,predicted\n";
        for (std::size_t j = 0; j < profile->values.size(); ++j)
            out << j << ',' << format_double(profile->values[j]) << ','
                << format_double(fit::gauss3_eval(chosen->fit.params, static_cast<double>(j))) << '\n';
    } else if (kind == "scores") {
        const auto t = read_table_file(args.input);
        const std::size_t cs = column(t, args.input, "spec"), cr = column(t, args.input, "repeat");
        const std::size_t ca = column(t, args.input, "accuracy");
        std::vector<std::string> order;
        std::map<std::string, std::map<std::size_t, std::pair<double, std::size_t>>> sums;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto& name = t.rows[r][cs];
            if (!sums.contains(name)) order.push_back(name);
            auto& cell = sums[name][get_index(t, r, cr)];
            cell.first += get_double(t, r, ca);
            ++cell.second;
        }
        out << "spec,repeat,score\n";
        for (const auto& name : order)
            for (const auto& [rep, cell] : sums[name])
                out << name << ',' << rep << ',' << format_double(cell.first / static_cast<double>(cell.second))
                    << '\n';
    } else {
        throw Error(Errc::UnknownKind, "unknown plot kind '" + kind + "' (velocity, peaks, onsets, fit, scores)");
    }
    write_output(args.out, out.str());
}

}  // namespace glissade::cli
