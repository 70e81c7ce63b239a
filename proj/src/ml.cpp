#include "glissade/ml.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "glissade/error.hpp"
#include "glissade/parallel.hpp"

namespace glissade::ml {

namespace {

__extension__ typedef __int128 Wide;

void check_finite(const Features& x) {
    for (double v : x)
        if (!std::isfinite(v)) throw Error(Errc::NonFiniteFeature, "feature vector contains a non-finite value");
}

Label majority(std::size_t none, std::size_t glissade) {
    return glissade > none ? Label::glissade : Label::none;
}

// Gini split quality as an exact fraction num/den; larger is better. Maximizing
// sum_side (sum_class count^2) / side_size is equivalent to minimizing weighted Gini.
struct SplitScore {
    Wide num = -1;
    Wide den = 1;

    bool better_than(const SplitScore& o) const { return num * o.den > o.num * den; }
};

SplitScore score_split(std::size_t l0, std::size_t l1, std::size_t r0, std::size_t r1) {
    const Wide nl = static_cast<Wide>(l0 + l1);
    const Wide nr = static_cast<Wide>(r0 + r1);
    const Wide sl = static_cast<Wide>(l0) * l0 + static_cast<Wide>(l1) * l1;
    const Wide sr = static_cast<Wide>(r0) * r0 + static_cast<Wide>(r1) * r1;
    return {sl * nr + sr * nl, nl * nr};
}

class TreeGrower {
public:
    TreeGrower(std::span<const Features> x, std::span<const Label> y, const TreeOptions& options, Rng* rng)
        : x_(x), y_(y), options_(options), rng_(rng) {}

    DecisionTree grow(std::span<const std::size_t> rows) {
        idx_.assign(rows.begin(), rows.end());
        buf_.resize(idx_.size());
        DecisionTree tree;
        if (!idx_.empty()) build(tree, 0, idx_.size(), 0);
        return tree;
    }

private:
    struct Best {
        int feature = -1;
        double threshold = 0.0;
        SplitScore score;
    };

    std::uint32_t build(DecisionTree& tree, std::size_t begin, std::size_t end, std::size_t depth) {
        std::size_t c0 = 0, c1 = 0;
        for (std::size_t i = begin; i < end; ++i) (y_[idx_[i]] == Label::glissade ? c1 : c0)++;

        const auto self = static_cast<std::uint32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{-1, 0.0, 0, 0, majority(c0, c1)});

        const std::size_t n = end - begin;
        const bool pure = c0 == 0 || c1 == 0;
        const bool deep = options_.max_depth && depth >= *options_.max_depth;
        if (pure || deep || n < 2 * options_.min_leaf) return self;

        Best best = search(begin, end, c0, c1);
        if (best.feature < 0) return self;

        const auto f = static_cast<std::size_t>(best.feature);
        const auto mid = std::stable_partition(idx_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               idx_.begin() + static_cast<std::ptrdiff_t>(end),
                                               [&](std::size_t r) { return x_[r][f] <= best.threshold; });
        const auto split = static_cast<std::size_t>(mid - idx_.begin());

        tree.nodes[self].feature = best.feature;
        tree.nodes[self].threshold = best.threshold;
        const auto left = build(tree, begin, split, depth + 1);
        const auto right = build(tree, split, end, depth + 1);
        tree.nodes[self].left = left;
        tree.nodes[self].right = right;
        return self;
    }

    Best search(std::size_t begin, std::size_t end, std::size_t c0, std::size_t c1) {
        std::array<std::size_t, kFeatureCount> features{};
        std::iota(features.begin(), features.end(), std::size_t{0});
        std::size_t drawn = kFeatureCount;
        if (options_.features_per_split < kFeatureCount && rng_ != nullptr) {
            drawn = options_.features_per_split;
            for (std::size_t i = 0; i < drawn; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, kFeatureCount - 1);
                std::swap(features[i], features[pick(*rng_)]);
            }
        }
        std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(drawn));
        std::sort(features.begin() + static_cast<std::ptrdiff_t>(drawn), features.end());

        Best best;
        for (std::size_t i = 0; i < drawn; ++i) evaluate(features[i], begin, end, c0, c1, best);
        // Like common CART implementations, keep looking past the drawn
        // candidates when none of them admits a valid split.
        for (std::size_t i = drawn; i < kFeatureCount && best.feature < 0; ++i)
            evaluate(features[i], begin, end, c0, c1, best);
        return best;
    }

    void evaluate(std::size_t f, std::size_t begin, std::size_t end, std::size_t c0, std::size_t c1, Best& best) {
        const std::size_t n = end - begin;
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = idx_[begin + i];
            buf_[i] = {x_[r][f], y_[r] == Label::glissade};
        }
        std::sort(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));

        std::size_t l0 = 0, l1 = 0;
        for (std::size_t i = 1; i < n; ++i) {
            (buf_[i - 1].second ? l1 : l0)++;
            if (!(buf_[i - 1].first < buf_[i].first)) continue;
            if (i < options_.min_leaf || n - i < options_.min_leaf) continue;
            const SplitScore s = score_split(l0, l1, c0 - l0, c1 - l1);
            if (s.better_than(best.score)) {
                double thr = 0.5 * (buf_[i - 1].first + buf_[i].first);
                if (!(thr < buf_[i].first)) thr = buf_[i - 1].first;
                best = {static_cast<int>(f), thr, s};
            }
        }
    }

    std::span<const Features> x_;
    std::span<const Label> y_;
    TreeOptions options_;
    Rng* rng_;
    std::vector<std::size_t> idx_;
    std::vector<std::pair<double, bool>> buf_;
};

void split_columns(const Dataset& data, std::vector<Features>& x, std::vector<Label>& y) {
    x.reserve(data.size());
    y.reserve(data.size());
    for (const auto& s : data.samples) {
        check_finite(s.features);
        x.push_back(s.features);
        y.push_back(s.label);
    }
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::knn: return "knn";
        case ModelKind::cart: return "cart";
        case ModelKind::forest: return "forest";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
    if (name == "knn") return ModelKind::knn;
    if (name == "cart") return ModelKind::cart;
    if (name == "forest") return ModelKind::forest;
    throw Error(Errc::UnknownKind, "unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
    if (knn_k < 1) throw Error(Errc::InvalidConfig, "knn_k must be >= 1");
    if (cart_min_leaf < 1) throw Error(Errc::InvalidConfig, "cart_min_leaf must be >= 1");
    if (cart_max_depth && *cart_max_depth < 1) throw Error(Errc::InvalidConfig, "cart_max_depth must be >= 1");
    if (forest_trees < 1) throw Error(Errc::InvalidConfig, "forest_trees must be >= 1");
    if (forest_features_per_split < 1 || forest_features_per_split > kFeatureCount)
        throw Error(Errc::InvalidConfig, "forest_features_per_split must lie in [1, 4]");
}

Standardizer Standardizer::fit(std::span<const Features> rows) {
    Standardizer s;
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double sum = 0.0;
        for (const auto& r : rows) sum += r[f];
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& r : rows) sq += (r[f] - mean) * (r[f] - mean);
        const double sd = std::sqrt(sq / n);
        s.mean[f] = mean;
        s.scale[f] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Features Standardizer::apply(const Features& x) const noexcept {
    Features out{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) out[f] = (x[f] - mean[f]) / scale[f];
    return out;
}

KnnClassifier::KnnClassifier(std::size_t k, std::span<const Features> rows, std::span<const Label> labels)
    : k_(k), scaler_(Standardizer::fit(rows)), labels_(labels.begin(), labels.end()) {
    points_.reserve(rows.size());
    for (const auto& r : rows) points_.push_back(scaler_.apply(r));
}

KnnClassifier KnnClassifier::from_parts(std::size_t k, Standardizer scaler, std::vector<Features> standardized_points,
                                        std::vector<Label> labels) {
    if (standardized_points.size() != labels.size())
        throw Error(Errc::LengthMismatch, "points and labels differ in length");
    KnnClassifier m;
    m.k_ = k;
    m.scaler_ = scaler;
    m.points_ = std::move(standardized_points);
    m.labels_ = std::move(labels);
    return m;
}

Label KnnClassifier::predict(const Features& x) const {
    if (points_.empty()) throw Error(Errc::NotTrained, "KNN has no training points");
    const Features q = scaler_.apply(x);
    std::vector<std::pair<double, std::size_t>> dist(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        double d = 0.0;
        for (std::size_t f = 0; f < kFeatureCount; ++f) d += (points_[i][f] - q[f]) * (points_[i][f] - q[f]);
        dist[i] = {d, i};
    }
    const std::size_t k = std::min(k_, dist.size());
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::size_t votes[2] = {0, 0};
    for (std::size_t i = 0; i < k; ++i) votes[labeling::to_int(labels_[dist[i].second])]++;
    return majority(votes[0], votes[1]);
}

Label DecisionTree::predict(const Features& x) const {
    if (nodes.empty()) throw Error(Errc::NotTrained, "empty tree");
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[i].label;
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[i].is_leaf()) {
            stack.emplace_back(nodes[i].left, d + 1);
            stack.emplace_back(nodes[i].right, d + 1);
        }
    }
    return deepest;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTree grow_tree(std::span<const Features> x, std::span<const Label> y, std::span<const std::size_t> rows,
                       const TreeOptions& options, Rng* rng) {
    if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "features and labels differ in length");
    if (options.min_leaf < 1) throw Error(Errc::InvalidConfig, "min_leaf must be >= 1");
    TreeGrower grower(x, y, options, rng);
    return grower.grow(rows);
}

std::array<std::size_t, 2> RandomForest::votes(const Features& x) const {
    std::array<std::size_t, 2> v{0, 0};
    for (const auto& t : trees) v[static_cast<std::size_t>(labeling::to_int(t.predict(x)))]++;
    return v;
}

Label RandomForest::predict(const Features& x) const {
    if (trees.empty()) throw Error(Errc::NotTrained, "forest has no trees");
    const auto v = votes(x);
    return majority(v[0], v[1]);
}

Label TrainedModel::predict(const Features& x) const {
    if (!trained()) throw Error(Errc::NotTrained, "model has not been trained");
    check_finite(x);
    return std::visit(
        [&](const auto& m) -> Label {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, std::monostate>)
                throw Error(Errc::NotTrained, "model has not been trained");
            else
                return m.predict(x);
        },
        model_);
}

TrainedModel train(const ModelSpec& spec, const Dataset& data, std::size_t jobs) {
    spec.validate();
    if (data.empty()) throw Error(Errc::EmptyData, "training set is empty");
    if (!data.has_both_classes()) throw Error(Errc::SingleClassData, "training set holds a single class");

    std::vector<Features> x;
    std::vector<Label> y;
    split_columns(data, x, y);

    switch (spec.kind) {
        case ModelKind::knn:
            return {spec, KnnClassifier(spec.knn_k, x, y)};
        case ModelKind::cart: {
            std::vector<std::size_t> rows(x.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            TreeOptions opt{spec.cart_max_depth, spec.cart_min_leaf, kFeatureCount};
            return {spec, grow_tree(x, y, rows, opt)};
        }
        case ModelKind::forest: {
            RandomForest forest;
            forest.trees.resize(spec.forest_trees);
            const TreeOptions opt{spec.cart_max_depth, spec.cart_min_leaf, spec.forest_features_per_split};
            parallel_for(spec.forest_trees, jobs, [&](std::size_t t) {
                Rng rng(derive_seed(spec.seed, {t}));
                std::vector<std::size_t> rows(x.size());
                if (spec.forest_bootstrap) {
                    std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
                    for (auto& r : rows) r = pick(rng);
                } else {
                    std::iota(rows.begin(), rows.end(), std::size_t{0});
                }
                forest.trees[t] = grow_tree(x, y, rows, opt, &rng);
            });
            return {spec, std::move(forest)};
        }
    }
    throw Error(Errc::UnknownKind, "unhandled model kind");
}

Label predict(const TrainedModel& model, const Features& x) { return model.predict(x); }

double accuracy(std::span<const Label> predicted, std::span<const Label> actual) {
    if (predicted.size() != actual.size()) throw Error(Errc::LengthMismatch, "label sequences differ in length");
    if (predicted.empty()) throw Error(Errc::EmptyInput, "accuracy of empty sequences");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double CvReport::repeat_mean(std::size_t repeat) const {
    if (repeat >= repeats) throw Error(Errc::InvalidConfig, "repeat index out of range");
    const auto first = fold_scores.begin() + static_cast<std::ptrdiff_t>(repeat * folds);
    return std::accumulate(first, first + static_cast<std::ptrdiff_t>(folds), 0.0) / static_cast<double>(folds);
}

CvReport cross_validate(const Trainer& trainer, const Dataset& data, std::size_t folds, std::size_t repeats,
                        std::uint64_t seed, std::size_t jobs) {
    if (folds < 2) throw Error(Errc::InvalidConfig, "need at least 2 folds");
    if (repeats < 1) throw Error(Errc::InvalidConfig, "need at least 1 repeat");
    const std::size_t n = data.size();
    if (n < folds) throw Error(Errc::TooFewSamples, "fewer samples (" + std::to_string(n) + ") than folds");

    std::vector<std::vector<std::size_t>> perms(repeats, std::vector<std::size_t>(n));
    for (std::size_t r = 0; r < repeats; ++r) {
        std::iota(perms[r].begin(), perms[r].end(), std::size_t{0});
        Rng rng(derive_seed(seed, {r}));
        std::shuffle(perms[r].begin(), perms[r].end(), rng);
    }

    CvReport report;
    report.folds = folds;
    report.repeats = repeats;
    report.fold_scores.assign(folds * repeats, 0.0);

    parallel_for(folds * repeats, jobs, [&](std::size_t unit) {
        const std::size_t r = unit / folds;
        const std::size_t f = unit % folds;
        const std::size_t lo = f * n / folds;
        const std::size_t hi = (f + 1) * n / folds;
        std::vector<char> in_test(n, 0);
        for (std::size_t i = lo; i < hi; ++i) in_test[perms[r][i]] = 1;

        Dataset train_set;
        train_set.samples.reserve(n - (hi - lo));
        for (std::size_t i = 0; i < n; ++i)
            if (!in_test[i]) train_set.samples.push_back(data.samples[i]);

        const Predictor predictor = trainer(train_set, derive_seed(seed, {r, f, 0x7f}));
        std::vector<Label> predicted, actual;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& s = data.samples[perms[r][i]];
            predicted.push_back(predictor(s.features));
            actual.push_back(s.label);
        }
        report.fold_scores[unit] = accuracy(predicted, actual);
    });

    const double count = static_cast<double>(report.fold_scores.size());
    report.mean = std::accumulate(report.fold_scores.begin(), report.fold_scores.end(), 0.0) / count;
    double sq = 0.0;
    for (double s : report.fold_scores) sq += (s - report.mean) * (s - report.mean);
    report.std = std::sqrt(sq / count);
    return report;
}

CvReport cross_validate(const ModelSpec& spec, const Dataset& data, std::size_t folds, std::size_t repeats,
                        std::uint64_t seed, std::size_t jobs) {
    spec.validate();
    const Trainer trainer = [spec](const Dataset& train_set, std::uint64_t fold_seed) -> Predictor {
        ModelSpec s = spec;
        s.seed = derive_seed(spec.seed, {fold_seed});
        auto model = std::make_shared<const TrainedModel>(train(s, train_set));
        return [model](const Features& x) { return model->predict(x); };
    };
    return cross_validate(trainer, data, folds, repeats, seed, jobs);
}

std::vector<CvReport> knn_sweep(const Dataset& data, std::size_t k_max, std::size_t folds, std::size_t repeats,
                                std::uint64_t seed, std::size_t jobs) {
    std::vector<CvReport> out;
    out.reserve(k_max);
    for (std::size_t k = 1; k <= k_max; ++k) {
        ModelSpec spec;
        spec.kind = ModelKind::knn;
        spec.knn_k = k;
        out.push_back(cross_validate(spec, data, folds, repeats, seed, jobs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

using nlohmann::json;

json tree_to_json(const DecisionTree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, labeling::to_int(n.label)});
    return nodes;
}

DecisionTree tree_from_json(const json& j) {
    DecisionTree t;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<std::uint32_t>();
        node.right = n.at(3).get<std::uint32_t>();
        node.label = labeling::label_from_int(n.at(4).get<int>());
        t.nodes.push_back(node);
    }
    const auto count = t.nodes.size();
    for (const auto& n : t.nodes)
        if (!n.is_leaf() && (n.feature >= static_cast<int>(kFeatureCount) || n.left >= count || n.right >= count))
            throw Error(Errc::InvalidConfig, "corrupt tree node");
    return t;
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
    if (!model.trained()) throw Error(Errc::NotTrained, "cannot save an untrained model");
    const auto& spec = model.spec();
    json j;
    j["format"] = "glissade-model";
    j["version"] = 1;
    j["spec"] = {
        {"kind", std::string(to_string(spec.kind))},
        {"knn_k", spec.knn_k},
        {"cart_max_depth", spec.cart_max_depth ? json(*spec.cart_max_depth) : json(nullptr)},
        {"cart_min_leaf", spec.cart_min_leaf},
        {"forest_trees", spec.forest_trees},
        {"forest_features_per_split", spec.forest_features_per_split},
        {"forest_bootstrap", spec.forest_bootstrap},
        {"seed", spec.seed},
    };
    if (const auto* knn = std::get_if<KnnClassifier>(&model.model())) {
        json labels = json::array();
        for (auto l : knn->labels()) labels.push_back(labeling::to_int(l));
        j["knn"] = {{"k", knn->k()},
                    {"mean", knn->standardizer().mean},
                    {"scale", knn->standardizer().scale},
                    {"points", knn->points()},
                    {"labels", labels}};
    } else if (const auto* tree = std::get_if<DecisionTree>(&model.model())) {
        j["tree"] = tree_to_json(*tree);
    } else if (const auto* forest = std::get_if<RandomForest>(&model.model())) {
        json trees = json::array();
        for (const auto& t : forest->trees) trees.push_back(tree_to_json(t));
        j["forest"] = trees;
    }
    out << j.dump() << '\n';
}

TrainedModel load_model(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("model file is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "glissade-model") throw Error(Errc::InvalidConfig, "not a glissade model file");
    if (j.value("version", 0) != 1) throw Error(Errc::InvalidConfig, "unsupported model version");
    try {
        const auto& s = j.at("spec");
        ModelSpec spec;
        spec.kind = parse_model_kind(s.at("kind").get<std::string>());
        spec.knn_k = s.at("knn_k").get<std::size_t>();
        if (!s.at("cart_max_depth").is_null()) spec.cart_max_depth = s.at("cart_max_depth").get<std::size_t>();
        spec.cart_min_leaf = s.at("cart_min_leaf").get<std::size_t>();
        spec.forest_trees = s.at("forest_trees").get<std::size_t>();
        spec.forest_features_per_split = s.at("forest_features_per_split").get<std::size_t>();
        spec.forest_bootstrap = s.at("forest_bootstrap").get<bool>();
        spec.seed = s.at("seed").get<std::uint64_t>();
        spec.validate();

        switch (spec.kind) {
            case ModelKind::knn: {
                const auto& k = j.at("knn");
                Standardizer scaler;
                scaler.mean = k.at("mean").get<std::array<double, kFeatureCount>>();
                scaler.scale = k.at("scale").get<std::array<double, kFeatureCount>>();
                std::vector<Label> labels;
                for (const auto& l : k.at("labels")) labels.push_back(labeling::label_from_int(l.get<int>()));
                return {spec, KnnClassifier::from_parts(k.at("k").get<std::size_t>(), scaler,
                                                        k.at("points").get<std::vector<Features>>(), std::move(labels))};
            }
            case ModelKind::cart:
                return {spec, tree_from_json(j.at("tree"))};
            case ModelKind::forest: {
                RandomForest forest;
                for (const auto& t : j.at("forest")) forest.trees.push_back(tree_from_json(t));
                return {spec, std::move(forest)};
            }
        }
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, std::string("malformed model file: ") + e.what());
    }
    throw Error(Errc::InvalidConfig, "malformed model file");
}

}  // namespace glissade::ml
