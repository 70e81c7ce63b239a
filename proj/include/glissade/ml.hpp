#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "glissade/labeling.hpp"
#include "glissade/random.hpp"

namespace glissade::ml {

using labeling::Dataset;
using labeling::Features;
using labeling::Label;

inline constexpr std::size_t kFeatureCount = std::tuple_size_v<Features>;

enum class ModelKind { knn, cart, forest };

std::string_view to_string(ModelKind kind) noexcept;
/// Errors: UnknownKind.
ModelKind parse_model_kind(std::string_view name);

/// Hyperparameters. Defaults follow the usual library defaults: 5 neighbours,
/// unbounded CART with single-sample leaves, 100 bootstrapped trees with
/// floor(sqrt(4)) = 2 candidate features per split.
struct ModelSpec {
    ModelKind kind = ModelKind::forest;
    std::size_t knn_k = 5;
    std::optional<std::size_t> cart_max_depth;
    std::size_t cart_min_leaf = 1;
    std::size_t forest_trees = 100;
    std::size_t forest_features_per_split = 2;
    bool forest_bootstrap = true;
    std::uint64_t seed = 0;

    /// Errors: InvalidConfig.
    void validate() const;
};

/// Zero-mean / unit-variance scaling. Constant columns get unit scale.
struct Standardizer {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> scale{1.0, 1.0, 1.0, 1.0};

    static Standardizer fit(std::span<const Features> rows);
    Features apply(const Features& x) const noexcept;
};

class KnnClassifier {
public:
    KnnClassifier() = default;
    KnnClassifier(std::size_t k, std::span<const Features> rows, std::span<const Label> labels);

    /// Majority among the k nearest training points (Euclidean, standardized
    /// space). Equal distances resolve to the earlier training row; a tied vote
    /// yields Label::none.
    Label predict(const Features& x) const;

    std::size_t k() const noexcept { return k_; }
    const Standardizer& standardizer() const noexcept { return scaler_; }
    const std::vector<Features>& points() const noexcept { return points_; }
    const std::vector<Label>& labels() const noexcept { return labels_; }

    static KnnClassifier from_parts(std::size_t k, Standardizer scaler, std::vector<Features> standardized_points,
                                    std::vector<Label> labels);

private:
    std::size_t k_ = 1;
    Standardizer scaler_;
    std::vector<Features> points_;  // standardized
    std::vector<Label> labels_;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    Label label = Label::none;  // majority of the node's training rows

    bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeOptions {
    std::optional<std::size_t> max_depth;
    std::size_t min_leaf = 1;
    // Candidate features drawn per split; kFeatureCount means all (no randomness).
    std::size_t features_per_split = kFeatureCount;
};

/// Binary classification tree, nodes stored in preorder with the root at 0.
class DecisionTree {
public:
    std::vector<TreeNode> nodes;

    Label predict(const Features& x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
};

/// Greedy Gini CART on the given rows (duplicates allowed, as in a bootstrap).
/// Splits are midpoints between consecutive distinct values; ties in impurity go
/// to the lowest feature index, then the lowest threshold. `rng` is only drawn
/// from when features_per_split < kFeatureCount.
DecisionTree grow_tree(std::span<const Features> x, std::span<const Label> y, std::span<const std::size_t> rows,
                       const TreeOptions& options, Rng* rng = nullptr);

class RandomForest {
public:
    std::vector<DecisionTree> trees;

    /// Plurality of tree votes, ties to Label::none.
    Label predict(const Features& x) const;
    /// Votes for {none, glissade}.
    std::array<std::size_t, 2> votes(const Features& x) const;
};

class TrainedModel {
public:
    using Model = std::variant<std::monostate, KnnClassifier, DecisionTree, RandomForest>;

    TrainedModel() = default;
    TrainedModel(ModelSpec spec, Model model) : spec_(std::move(spec)), model_(std::move(model)) {}

    bool trained() const noexcept { return !std::holds_alternative<std::monostate>(model_); }
    const ModelSpec& spec() const noexcept { return spec_; }
    const Model& model() const noexcept { return model_; }

    /// Errors: NotTrained, NonFiniteFeature.
    Label predict(const Features& x) const;

private:
    ModelSpec spec_;
    Model model_;
};

/// Errors: EmptyData, SingleClassData, NonFiniteFeature, InvalidConfig.
/// Forest trees are grown on up to `jobs` threads, each from its own seed stream.
TrainedModel train(const ModelSpec& spec, const Dataset& data, std::size_t jobs = 1);

Label predict(const TrainedModel& model, const Features& x);

/// Fraction of equal entries. Errors: LengthMismatch, EmptyInput.
double accuracy(std::span<const Label> predicted, std::span<const Label> actual);

struct CvReport {
    std::vector<double> fold_scores;  // repeat-major
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t repeats = 0;
    std::size_t folds = 0;

    /// Mean of one repeat's fold scores.
    double repeat_mean(std::size_t repeat) const;
};

using Predictor = std::function<Label(const Features&)>;
/// Builds a predictor from a training partition. The seed is unique per (repeat, fold).
using Trainer = std::function<Predictor(const Dataset& train, std::uint64_t seed)>;

/// Repeated k-fold cross-validation. Repeat r shuffles with a seed derived from
/// (seed, r) and cuts `folds` contiguous near-equal parts; each part is scored
/// once by a model trained on the remaining parts.
/// Errors: TooFewSamples, InvalidConfig.
CvReport cross_validate(const Trainer& trainer, const Dataset& data, std::size_t folds, std::size_t repeats,
                        std::uint64_t seed, std::size_t jobs = 1);
CvReport cross_validate(const ModelSpec& spec, const Dataset& data, std::size_t folds, std::size_t repeats,
                        std::uint64_t seed, std::size_t jobs = 1);

/// Cross-validated KNN for k = 1..k_max, same fold assignment for every k.
std::vector<CvReport> knn_sweep(const Dataset& data, std::size_t k_max, std::size_t folds, std::size_t repeats,
                                std::uint64_t seed, std::size_t jobs = 1);

/// JSON document tagged {"format": "glissade-model", "version": 1}.
void save_model(std::ostream& out, const TrainedModel& model);
/// Errors: InvalidConfig for an unknown format or version.
TrainedModel load_model(std::istream& in);

}  // namespace glissade::ml
