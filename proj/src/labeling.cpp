#include "glissade/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "glissade/csv.hpp"
#include "glissade/error.hpp"
#include "glissade/random.hpp"

namespace glissade::labeling {

Label label_from_int(long long value) {
    if (value == 0) return Label::none;
    if (value == 1) return Label::glissade;
    throw Error(Errc::InvalidConfig, "label must be 0 or 1, got " + std::to_string(value));
}

BiDifferences bi_differences(const fit::Gauss3Params& params) noexcept {
    const auto& b = params.b;
    return {std::abs(b[0] - b[1]), std::abs(b[0] - b[2]), std::abs(b[1] - b[2])};
}

Label rule_classify(const fit::Gauss3Params& params, double threshold) {
    if (!(threshold > 0.0)) throw Error(Errc::NonPositiveThreshold, "rule threshold must be positive");
    const auto d = bi_differences(params);
    const bool clustered = d.d12 < threshold && d.d13 < threshold && d.d23 < threshold;
    return clustered ? Label::none : Label::glissade;
}

std::size_t Dataset::count(Label l) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [l](const LabeledSample& s) { return s.label == l; }));
}

LabeledSample build_sample(const fit::FitResult& fit, const LabelSource& source, std::string provenance) {
    if (!fit.converged) throw Error(Errc::Unconverged, "fit did not converge" + (provenance.empty() ? "" : " for " + provenance));
    LabeledSample s;
    s.features = {fit.rmse, fit.params.b[0], fit.params.b[1], fit.params.b[2]};
    for (double f : s.features)
        if (!std::isfinite(f)) throw Error(Errc::NonFiniteFeature, "fit produced a non-finite feature");
    s.label = std::visit(
        [&](const auto& src) -> Label {
            using T = std::decay_t<decltype(src)>;
            if constexpr (std::is_same_v<T, RuleLabel>)
                return rule_classify(fit.params, src.threshold);
            else
                return src.label;
        },
        source);
    s.provenance = std::move(provenance);
    return s;
}

DatasetSplit split_dataset(const Dataset& data, double split_fraction, std::uint64_t seed) {
    if (data.empty()) throw Error(Errc::EmptyInput, "cannot split an empty dataset");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw Error(Errc::InvalidConfig, "split fraction must lie in (0, 1)");

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {0x5911}));
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(std::llround(split_fraction * static_cast<double>(n)));
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> holdout(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(holdout.begin(), holdout.end());

    DatasetSplit out;
    for (auto i : train) out.train.samples.push_back(data.samples[i]);
    for (auto i : holdout) out.holdout.samples.push_back(data.samples[i]);
    return out;
}

DatasetSplit build_dataset(std::span<const fit::FitResult> fits, std::span<const Label> labels,
                           std::span<const std::string> provenance, double split_fraction, std::uint64_t seed) {
    if (fits.size() != labels.size() || (!provenance.empty() && provenance.size() != fits.size()))
        throw Error(Errc::LengthMismatch, "fits, labels and provenance differ in length");
    if (fits.empty()) throw Error(Errc::EmptyInput, "no fits");
    Dataset all;
    all.samples.reserve(fits.size());
    for (std::size_t i = 0; i < fits.size(); ++i) {
        std::string id = provenance.empty() ? std::to_string(i) : provenance[i];
        all.samples.push_back(build_sample(fits[i], ManualLabel{labels[i]}, std::move(id)));
    }
    return split_dataset(all, split_fraction, seed);
}

void write_dataset(std::ostream& out, const Dataset& data) {
    out << "rmse,b1,b2,b3,label\n";
    for (const auto& s : data.samples) {
        for (double f : s.features) out << csv::format_double(f) << ',';
        out << to_int(s.label) << '\n';
    }
}

Dataset read_dataset(std::istream& in) {
    const auto table = csv::read_table(in);
    const std::size_t cols[4] = {table.column("rmse"), table.column("b1"), table.column("b2"), table.column("b3")};
    const std::size_t label_col = table.column("label");
    Dataset data;
    data.samples.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        LabeledSample s;
        for (std::size_t f = 0; f < 4; ++f) {
            const auto v = csv::parse_double(row[cols[f]]);
            if (!v || !std::isfinite(*v)) throw Error(Errc::MalformedRow, "bad feature '" + row[cols[f]] + "'", r + 1);
            s.features[f] = *v;
        }
        const auto l = csv::parse_int(row[label_col]);
        if (!l || (*l != 0 && *l != 1)) throw Error(Errc::MalformedRow, "label must be 0 or 1", r + 1);
        s.label = label_from_int(*l);
        s.provenance = std::to_string(r);
        data.samples.push_back(std::move(s));
    }
    return data;
}

ManualLabels read_manual_labels(std::istream& in) {
    const auto table = csv::read_table(in);
    const auto id_col = table.column("profile_id");
    const auto label_col = table.column("label");
    ManualLabels labels;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto l = csv::parse_int(table.rows[r][label_col]);
        if (!l || (*l != 0 && *l != 1)) throw Error(Errc::MalformedRow, "label must be 0 or 1", r + 1);
        labels[table.rows[r][id_col]] = label_from_int(*l);
    }
    return labels;
}

void write_manual_labels(std::ostream& out, std::span<const std::pair<std::string, Label>> labels) {
    out << "profile_id,label\n";
    for (const auto& [id, l] : labels) out << id << ',' << to_int(l) << '\n';
}

}  // namespace glissade::labeling
