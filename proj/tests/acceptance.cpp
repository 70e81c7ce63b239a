// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "glissade/csv.hpp"
#include "glissade/error.hpp"
#include "glissade/gauss_fit.hpp"
#include "glissade/labeling.hpp"
#include "glissade/ml.hpp"
#include "glissade/pipeline.hpp"
#include "glissade/preprocess.hpp"
#include "glissade/segmentation.hpp"
#include "glissade/synth.hpp"

using namespace glissade;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void report(int number, const char* title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d [%s] %s: %s\n", number, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
    std::fflush(stdout);
}

// ---- 1 -------------------------------------------------------------------

Outcome differentiator() {
    const auto t0 = Clock::now();
    const double h = 1.0 / 200.0;
    double worst_linear = 0.0;
    for (double m : {1.0, -3.5, 250.0, 1e4}) {
        std::vector<double> f(400);
        for (std::size_t k = 0; k < f.size(); ++k) f[k] = m * static_cast<double>(k) * h - 12.0;
        auto d = preprocess::lanczos11_derivative(f, h);
        for (std::size_t k = 5; k + 5 < f.size(); ++k) worst_linear = std::max(worst_linear, std::abs(d[k] - m) / std::abs(m));
    }
    std::vector<double> s(400);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = std::sin(2 * std::numbers::pi * static_cast<double>(k) * h);
    auto d = preprocess::lanczos11_derivative(s, h);
    double worst_sine = 0.0;
    for (std::size_t k = 5; k + 5 < s.size(); ++k)
        worst_sine = std::max(worst_sine, std::abs(d[k] - 2 * std::numbers::pi *
                                                               std::cos(2 * std::numbers::pi * static_cast<double>(k) * h)));
    const double elapsed = seconds_since(t0);
    return {worst_linear < 1e-12 && worst_sine < 1e-2 && elapsed < 1.0,
            fmt("linear max rel err %.3g (< 1e-12); 1 Hz sine max abs err %.4g deg/s (< 1e-2); %.3f s (< 1 s)",
                worst_linear, worst_sine, elapsed)};
}

// ---- 2 -------------------------------------------------------------------

Outcome gradient() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ua(1.0, 500.0), ub(0.0, 80.0), uc(0.5, 20.0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        fit::Gauss3Params p;
        for (int i = 0; i < 3; ++i) {
            p.a[i] = ua(rng);
            p.b[i] = ub(rng);
            p.c[i] = uc(rng);
        }
        const double x = ub(rng);
        const auto g = fit::gauss3_gradient(p, x);
        const auto v = p.to_array();
        for (int i = 0; i < 9; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(v[i]));
            auto up = v, dn = v;
            up[i] += h;
            dn[i] -= h;
            const double fd = (fit::gauss3_eval(fit::Gauss3Params::from_array(up), x) -
                               fit::gauss3_eval(fit::Gauss3Params::from_array(dn), x)) /
                              (up[i] - dn[i]);
            worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(g[i])));
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst < 1e-5 && elapsed < 5.0,
            fmt("1000 draws x 9 partials, max rel deviation %.3g (< 1e-5); %.3f s (< 5 s)", worst, elapsed)};
}

// ---- 3 -------------------------------------------------------------------

// Saccade-like layout: main pulse, a trailing glissade bump, a leading skew term.
fit::Gauss3Params saccade_like(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    fit::Gauss3Params p;
    const double a1 = 200 + 400 * u(rng), b1 = 20 + 10 * u(rng), c1 = 3 + 2 * u(rng);
    p.a = {a1, a1 * (0.1 + 0.2 * u(rng)), a1 * (0.2 + 0.3 * u(rng))};
    p.b = {b1, b1 + 12 + 13 * u(rng), b1 - 6 - 4 * u(rng)};
    p.c = {c1, 2 + 2 * u(rng), 3 + 2 * u(rng)};
    return p;
}

Outcome fit_recovery() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);
    std::normal_distribution<double> noise(0.0, 5.0);
    const int n = 200;
    int exact_ok = 0, noisy_ok = 0;
    double worst_rel = 0.0, worst_rmse = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto truth = saccade_like(rng);
        auto v = truth.to_array();
        for (auto& x : v) x *= 1.0 + jitter(rng);
        const auto init = fit::Gauss3Params::from_array(v);
        const auto y = fit::gauss3_curve(truth, 70);

        const auto r = fit::fit_gauss3(y, init);
        const auto got = r.params.to_array(), want = truth.to_array();
        double rel = 0.0;
        for (int i = 0; i < 9; ++i) rel = std::max(rel, std::abs(got[i] - want[i]) / std::abs(want[i]));
        worst_rel = std::max(worst_rel, rel);
        worst_rmse = std::max(worst_rmse, r.rmse);
        exact_ok += rel <= 1e-3 && r.rmse < 1e-6;

        auto yn = y;
        for (auto& x : yn) x += noise(rng);
        const auto rn = fit::fit_gauss3(yn, init);
        // Components may come back in any order: use the best matching.
        std::array<int, 3> perm{0, 1, 2};
        bool matched = false;
        do {
            bool all = true;
            for (int i = 0; i < 3; ++i) all &= std::abs(rn.params.b[perm[i]] - truth.b[i]) <= 2.0;
            matched |= all;
        } while (std::next_permutation(perm.begin(), perm.end()));
        noisy_ok += matched;
    }
    const double elapsed = seconds_since(t0);
    const double noisy_frac = static_cast<double>(noisy_ok) / n;
    return {exact_ok == n && noisy_frac >= 0.95 && elapsed < 30.0,
            fmt("noiseless %d/%d within 1e-3 rel and RMSE < 1e-6 (worst rel %.3g, worst RMSE %.3g); "
                "sigma 5 deg/s: all b_i within 2 samples in %.1f%% (>= 95%%); %.2f s (< 30 s)",
                exact_ok, n, worst_rel, worst_rmse, 100 * noisy_frac, elapsed)};
}

// ---- 4 -------------------------------------------------------------------

Outcome rule_invariance() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ub(-10.0, 90.0), uoff(-500.0, 500.0), ut(0.5, 30.0), ua(1.0, 300.0),
        uc(1.0, 10.0);
    int perm_violations = 0, shift_violations = 0;
    for (int t = 0; t < 10000; ++t) {
        fit::Gauss3Params p;
        for (int i = 0; i < 3; ++i) {
            p.a[i] = ua(rng);
            p.b[i] = ub(rng);
            p.c[i] = uc(rng);
        }
        const double thr = ut(rng);
        const auto base = labeling::rule_classify(p, thr);
        std::array<int, 3> perm{0, 1, 2};
        while (std::next_permutation(perm.begin(), perm.end())) {
            fit::Gauss3Params q;
            for (int i = 0; i < 3; ++i) {
                q.a[i] = p.a[perm[i]];
                q.b[i] = p.b[perm[i]];
                q.c[i] = p.c[perm[i]];
            }
            perm_violations += labeling::rule_classify(q, thr) != base;
        }
        auto shifted = p;
        const double off = uoff(rng);
        for (auto& b : shifted.b) b += off;
        shift_violations += labeling::rule_classify(shifted, thr) != base;
    }
    return {perm_violations == 0 && shift_violations == 0,
            fmt("10000 draws: %d permutation violations, %d offset violations (0 allowed)", perm_violations,
                shift_violations)};
}

// ---- 5 -------------------------------------------------------------------

std::vector<std::size_t> peaks_oracle(const std::vector<double>& s, double min_height, std::size_t min_distance) {
    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < s.size(); ++i)
        if (s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] >= min_height) cand.push_back(i);
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return s[a] != s[b] ? s[a] > s[b] : a < b; });
    std::vector<std::size_t> kept;
    for (auto c : cand) {
        bool ok = true;
        for (auto k : kept) ok &= min_distance <= 1 || (c > k ? c - k : k - c) >= min_distance;
        if (ok) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

Outcome oracles() {
    std::mt19937_64 rng(5);
    int peak_mismatch = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> s(3 + rng() % 300);
        const bool coarse = t % 2 == 0;
        std::uniform_real_distribution<double> u(0.0, 100.0);
        for (auto& x : s) x = coarse ? static_cast<double>(rng() % 10) : u(rng);
        const double h = coarse ? static_cast<double>(rng() % 8) : u(rng);
        const std::size_t d = rng() % 40;
        peak_mismatch += segmentation::find_peaks(s, h, d) != peaks_oracle(s, h, d);
    }

    // Forest votes against a per-tree recount.
    labeling::Dataset data;
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 400; ++i) {
        labeling::Features x{g(rng), g(rng) * 10 + 30, g(rng) * 10 + 30, g(rng) * 10 + 30};
        const bool pos = (x[1] - x[2]) * (x[1] - x[2]) > 100 || u(rng) < 0.1;
        data.samples.push_back({x, pos ? labeling::Label::glissade : labeling::Label::none, ""});
    }
    ml::ModelSpec spec;
    spec.kind = ml::ModelKind::forest;
    spec.forest_trees = 51;
    spec.seed = 5;
    const auto model = ml::train(spec, data);
    const auto& forest = std::get<ml::RandomForest>(model.model());
    int vote_mismatch = 0;
    for (int i = 0; i < 1000; ++i) {
        labeling::Features x{g(rng), g(rng) * 10 + 30, g(rng) * 10 + 30, g(rng) * 10 + 30};
        std::size_t pos = 0;
        for (const auto& t : forest.trees) pos += t.predict(x) == labeling::Label::glissade;
        const auto v = forest.votes(x);
        const auto expected = 2 * pos > forest.trees.size() ? labeling::Label::glissade : labeling::Label::none;
        vote_mismatch += v[1] != pos || v[0] != forest.trees.size() - pos || model.predict(x) != expected;
    }

    double worst_rmse = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> y(1 + rng() % 500), yh(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = g(rng) * 100;
            yh[i] = g(rng) * 100;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) sum += (y[i] - yh[i]) * (y[i] - yh[i]);
        const double naive = std::sqrt(sum / static_cast<double>(y.size()));
        worst_rmse = std::max(worst_rmse, std::abs(fit::rmse(y, yh) - naive) / std::max(1.0, naive));
    }
    return {peak_mismatch == 0 && vote_mismatch == 0 && worst_rmse <= 1e-12,
            fmt("find_peaks: %d/1000 mismatches; forest votes: %d/1000 mismatches; RMSE max deviation %.3g (<= 1e-12)",
                peak_mismatch, vote_mismatch, worst_rmse)};
}

// ---- 6 -------------------------------------------------------------------

struct SeedResult {
    std::uint64_t seed;
    std::size_t profiles;
    double forest;
    double cart;
    double worst_knn;
    std::vector<double> knn;
};

// Synthetic corpus labelled with the generator's glissade flags.
labeling::Dataset truth_dataset(std::uint64_t seed, std::size_t records, double noise) {
    synth::SynthConfig cfg;
    cfg.glissade_probability = 0.5;
    cfg.noise_std_deg = noise;
    cfg.seed = seed;
    const auto corpus = synth::synth_corpus(cfg, records);
    PipelineConfig pc;
    labeling::Dataset data;
    for (const auto& r : corpus) {
        const auto fits = fit_record(r.record, pc);
        if (fits.size() != r.truth.saccades.size()) continue;
        for (std::size_t k = 0; k < fits.size(); ++k) {
            if (!fits[k].fit.converged) continue;
            const auto label = r.truth.saccades[k].glissade ? labeling::Label::glissade : labeling::Label::none;
            data.samples.push_back(labeling::build_sample(fits[k].fit, labeling::ManualLabel{label}, fits[k].id()));
        }
    }
    return data;
}

std::vector<SeedResult> replication_runs;

Outcome replication() {
    const auto t0 = Clock::now();
    int ordered = 0;
    std::size_t smallest = SIZE_MAX;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto data = truth_dataset(seed, 450, 0.3);
        ml::ModelSpec forest, cart;
        forest.kind = ml::ModelKind::forest;
        cart.kind = ml::ModelKind::cart;
        forest.seed = cart.seed = seed;
        SeedResult r{seed, data.size(), 0, 0, 1.0, {}};
        r.forest = ml::cross_validate(forest, data, 10, 10, seed).mean;
        r.cart = ml::cross_validate(cart, data, 10, 10, seed).mean;
        for (const auto& k : ml::knn_sweep(data, 15, 10, 10, seed)) {
            r.knn.push_back(k.mean);
            r.worst_knn = std::min(r.worst_knn, k.mean);
        }
        const bool ok = r.forest >= 0.95 && r.forest >= r.cart && r.cart >= r.worst_knn;
        ordered += ok;
        smallest = std::min(smallest, r.profiles);
        per_seed += fmt("\n    seed %2llu: n=%zu RF %.4f CART %.4f worst KNN %.4f %s", static_cast<unsigned long long>(seed),
                        r.profiles, r.forest, r.cart, r.worst_knn, ok ? "ok" : "violated");
        replication_runs.push_back(std::move(r));
    }
    const double elapsed = seconds_since(t0);
    return {ordered >= 8 && smallest >= 2000 && elapsed < 300.0,
            fmt("RF >= 0.95 and RF >= CART >= worst KNN on %d/10 seeds (>= 8); smallest corpus %zu profiles "
                "(>= 2000); 10x10 CV; %.1f s (< 300 s)",
                ordered, smallest, elapsed) +
                per_seed};
}

// ---- CLI helpers -----------------------------------------------------------

int run_cli(const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + GLISSADE_CLI_PATH + "' " + args + " > cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void must_cli(const fs::path& dir, const std::string& args) {
    if (run_cli(dir, args) != 0) {
        std::ifstream log(dir / "cli.log");
        std::stringstream ss;
        ss << log.rdbuf();
        throw std::runtime_error("'glissade " + args + "' failed: " + ss.str());
    }
}

csv::Table load_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing " + path.string());
    return csv::read_table(in);
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("glissade_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---- 7 -------------------------------------------------------------------

Outcome knn_curve() {
    const auto dir = fresh_dir("knn");
    must_cli(dir, "--seed 7 synth --out-dir corpus --records 100 --noise 0.3");
    must_cli(dir, "preprocess corpus/synth -o vel.csv");
    must_cli(dir, "segment vel.csv -o prof.csv");
    must_cli(dir, "fit prof.csv -o fits.csv");
    must_cli(dir, "label fits.csv -o data.csv");
    must_cli(dir, "--seed 7 evaluate data.csv --models knn:sweep --knn-sweep 15 --folds-out folds.csv -o report.txt");
    must_cli(dir, "export-plot scores folds.csv -o scores.csv");
    const auto folds = load_table(dir / "folds.csv");
    std::map<std::string, std::pair<double, int>> per_k;
    for (const auto& row : folds.rows) {
        auto& cell = per_k[row[0]];
        cell.first += *csv::parse_double(row[3]);
        ++cell.second;
    }
    bool complete = per_k.size() == 15;
    std::string curve;
    for (int k = 1; k <= 15; ++k) {
        auto it = per_k.find("knn:" + std::to_string(k));
        if (it == per_k.end() || it->second.second != 100) {
            complete = false;
            continue;
        }
        curve += fmt(" k=%d:%.4f", k, it->second.first / it->second.second);
    }
    std::string seed_curve;
    if (!replication_runs.empty()) {
        seed_curve = "\n    ground-truth corpus, seed 1:";
        for (std::size_t k = 0; k < replication_runs.front().knn.size(); ++k)
            seed_curve += fmt(" k=%zu:%.4f", k + 1, replication_runs.front().knn[k]);
    }
    fs::remove_all(dir);
    return {complete, fmt("%zu/15 k values with 100 fold scores each\n    rule-labelled corpus (CLI):", per_k.size()) +
                          curve + seed_curve};
}

// ---- 8 -------------------------------------------------------------------

Outcome end_to_end() {
    const auto dir = fresh_dir("e2e");
    const auto t0 = Clock::now();
    must_cli(dir, "--seed 8 synth --out-dir corpus --records 200");
    must_cli(dir, "preprocess corpus/synth -o vel.csv");
    must_cli(dir, "segment vel.csv -o prof.csv");
    must_cli(dir, "fit prof.csv -o fits.csv");
    must_cli(dir, "label fits.csv -o data.csv --labels-out labels.csv");
    const double elapsed = seconds_since(t0);

    const auto truth = load_table(dir / "corpus" / "ground_truth.csv");
    const auto labels = load_table(dir / "labels.csv");
    std::map<std::string, std::string> predicted;
    for (const auto& row : labels.rows) predicted[row[0]] = row[1];
    std::size_t total = 0, agree = 0;
    const auto cs = truth.column("subject"), ct = truth.column("test"), ck = truth.column("saccade"),
               cg = truth.column("glissade");
    for (const auto& row : truth.rows) {
        ++total;
        auto it = predicted.find(row[cs] + ":" + row[ct] + ":" + row[ck]);
        agree += it != predicted.end() && it->second == row[cg];
    }
    const double frac = static_cast<double>(agree) / static_cast<double>(total);
    fs::remove_all(dir);
    return {total >= 1000 && frac >= 0.9 && elapsed < 60.0,
            fmt("%zu ground-truth saccades, %zu labelled profiles, agreement %.2f%% (>= 90%%); "
                "synth..label %.2f s (< 60 s)",
                total, labels.rows.size(), 100 * frac, elapsed)};
}

// ---- 9 -------------------------------------------------------------------

Outcome determinism() {
    const std::vector<std::string> commands{
        "--seed 9 --jobs 2 synth --out-dir corpus --records 25 --noise 0.2",
        "--jobs 2 preprocess corpus/synth -o vel.csv",
        "segment vel.csv -o prof.csv",
        "--jobs 2 fit prof.csv -o fits.csv --json fits.json",
        "--seed 9 label fits.csv -o train.csv --split 0.7 --holdout holdout.csv --labels-out labels.csv",
        "--seed 9 --jobs 2 train train.csv -o forest.json",
        "--seed 9 --model knn --knn-k 4 train train.csv -o knn.json",
        "--model cart train train.csv -o cart.json",
        "--seed 9 --jobs 2 --repeats 3 evaluate train.csv --models forest,cart,knn:sweep --knn-sweep 5 "
        "--folds-out folds.csv -o report.txt",
        "predict forest.json fits.csv -o pred.csv",
        "export-plot velocity vel.csv -o plot_velocity.csv",
        "export-plot peaks prof.csv -o plot_peaks.csv",
        "export-plot onsets prof.csv -o plot_onsets.csv",
        "export-plot fit prof.csv --fits fits.csv -o plot_fit.csv",
        "export-plot scores folds.csv -o plot_scores.csv",
    };
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    for (const auto& c : commands) {
        must_cli(a, c);
        must_cli(b, c);
    }
    std::size_t files = 0, differing = 0;
    std::string which;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file() || entry.path().filename() == "cli.log") continue;
        const auto rel = fs::relative(entry.path(), a);
        std::ifstream fa(entry.path(), std::ios::binary), fb(b / rel, std::ios::binary);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        ++files;
        if (!fb || sa.str() != sb.str()) {
            ++differing;
            which += " " + rel.string();
        }
    }
    fs::remove_all(a);
    fs::remove_all(b);
    return {differing == 0 && files >= 40,
            fmt("%zu commands run twice, %zu output files compared, %zu differ", commands.size(), files, differing) +
                which};
}

}  // namespace

int main() {
    report(1, "differentiator exactness", differentiator);
    report(2, "gradient check", gradient);
    report(3, "fit recovery", fit_recovery);
    report(4, "rule invariances", rule_invariance);
    report(5, "oracle equivalence", oracles);
    report(6, "scaled replication (RF >= CART >= worst KNN)", replication);
    report(7, "KNN k sweep", knn_curve);
    report(8, "end-to-end ground-truth agreement", end_to_end);
    report(9, "determinism", determinism);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
