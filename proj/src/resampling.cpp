#include "itsc/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "itsc/common.hpp"

namespace itsc::resample {

namespace {

void check_matrix(const FeatureMatrix& x, const char* where) {
    if (x.cols == 0) throw DataError(std::string(where) + ": matrix has zero columns");
    if (x.rows() == 0) throw DataError(std::string(where) + ": matrix has zero rows");
    if (x.values.size() != x.rows() * x.cols)
        throw DataError(std::string(where) + ": values size does not match rows*cols");
    if (x.origin.size() != x.rows())
        throw DataError(std::string(where) + ": origin size does not match row count");
    for (int label : x.labels)
        if (label != 0 && label != 1)
            throw DataError(std::string(where) + ": labels must be 0 or 1");
}

std::vector<std::size_t> rows_with_label(const FeatureMatrix& x, int label) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (x.labels[i] == label) out.push_back(i);
    return out;
}

void require_both_classes(const FeatureMatrix& x, const char* where) {
    bool has_pos = false;
    bool has_neg = false;
    for (int label : x.labels) (label == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw DataError(std::string(where) + ": both classes must be present");
}

void check_ratio(double ratio, const char* where) {
    if (!(ratio > 0.0) || !std::isfinite(ratio))
        throw ConfigError(std::string(where) + ": target_ratio must be positive and finite");
}

double sq_dist(const FeatureMatrix& x, std::size_t a, std::size_t b) {
    const double* pa = x.row(a);
    const double* pb = x.row(b);
    double acc = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
        const double d = pa[j] - pb[j];
        acc += d * d;
    }
    return acc;
}

void append_copy(FeatureMatrix& out, const FeatureMatrix& x, std::size_t i) {
    out.values.insert(out.values.end(), x.row(i), x.row(i) + x.cols);
    out.labels.push_back(x.labels[i]);
    out.origin.push_back(x.origin[i]);
}

FeatureMatrix filter_rows(const FeatureMatrix& x, const std::vector<char>& keep) {
    FeatureMatrix out;
    out.cols = x.cols;
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (keep[i]) append_copy(out, x, i);
    return out;
}

std::size_t clamp_k_warn(std::size_t k, std::size_t available, const char* where) {
    if (k == 0) throw ConfigError(std::string(where) + ": k_neighbors must be positive");
    if (k > available) {
        std::cerr << "warning: " << where << ": k reduced from " << k << " to " << available
                  << " (not enough candidate rows)\n";
        return available;
    }
    return k;
}

// Desired positive count for a sampler that adds minority rows.
std::size_t oversample_need(std::size_t n_pos, std::size_t n_neg, double ratio) {
    const auto target = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(n_neg)));
    return target > n_pos ? target - n_pos : 0;
}

// Desired negative count for a sampler that drops majority rows.
std::size_t undersample_keep(std::size_t n_pos, double ratio) {
    auto keep = static_cast<std::size_t>(
        std::llround(static_cast<double>(n_pos) / ratio));
    return keep == 0 ? 1 : keep;
}

std::vector<std::size_t> knn_in(const FeatureMatrix& x, std::size_t query,
                                const std::vector<std::size_t>& candidates, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(candidates.size());
    for (std::size_t c : candidates) order.emplace_back(sq_dist(x, query, c), c);
    const std::size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                      order.end());
    std::vector<std::size_t> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(order[i].second);
    return out;
}

std::vector<std::size_t> all_rows_except(std::size_t n, std::size_t skip) {
    std::vector<std::size_t> out;
    out.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        if (i != skip) out.push_back(i);
    return out;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void append_interpolated(FeatureMatrix& out, const FeatureMatrix& x, std::size_t a,
                         std::size_t b, double gap) {
    const double* pa = x.row(a);
    const double* pb = x.row(b);
    for (std::size_t j = 0; j < x.cols; ++j)
        out.values.push_back(pa[j] + gap * (pb[j] - pa[j]));
    out.labels.push_back(1);
    Origin mark;
    mark.synthetic = true;
    mark.parent_a = a;
    mark.parent_b = b;
    mark.gap = gap;
    out.origin.push_back(mark);
}

// Positive count among the k nearest all-class neighbors of each query row.
std::vector<std::size_t> positive_neighbor_counts(const FeatureMatrix& x,
                                                  const std::vector<std::size_t>& queries,
                                                  std::size_t k) {
    std::vector<std::size_t> counts;
    counts.reserve(queries.size());
    for (std::size_t q : queries) {
        const auto nn = knn_in(x, q, all_rows_except(x.rows(), q), k);
        std::size_t pos = 0;
        for (std::size_t j : nn) pos += static_cast<std::size_t>(x.labels[j] == 1);
        counts.push_back(pos);
    }
    return counts;
}

// Single-pass edited-nearest-neighbor removal set: rows whose label loses the
// strict-majority vote of their k nearest neighbors, judged on the original
// matrix. Restricted to majority rows unless either_class is set.
std::vector<char> enn_keep_flags(const FeatureMatrix& x, std::size_t k, bool either_class) {
    const std::size_t kk = std::min(k, x.rows() - 1);
    if (kk == 0) throw DataError("enn: need at least two rows");
    std::vector<char> keep(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (!either_class && x.labels[i] != 0) continue;
        const auto nn = knn_in(x, i, all_rows_except(x.rows(), i), kk);
        std::size_t pos = 0;
        for (std::size_t j : nn) pos += static_cast<std::size_t>(x.labels[j] == 1);
        const bool vote_pos = 2 * pos > kk;
        if (x.labels[i] == 0 && vote_pos) keep[i] = 0;
        if (either_class && x.labels[i] == 1 && !vote_pos) keep[i] = 0;
    }
    return keep;
}

// Tomek links: mutually nearest cross-class pairs. Drops the majority member,
// or both members if either_class is set.
std::vector<char> tomek_keep_flags(const FeatureMatrix& x, bool either_class) {
    const std::size_t n = x.rows();
    if (n < 2) throw DataError("tomek: need at least two rows");
    std::vector<std::size_t> nn1(n);
    for (std::size_t i = 0; i < n; ++i)
        nn1[i] = knn_in(x, i, all_rows_except(n, i), 1).front();
    std::vector<char> keep(n, 1);
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t b = nn1[a];
        if (a < b && nn1[b] == a && x.labels[a] != x.labels[b]) {
            if (either_class) {
                keep[a] = 0;
                keep[b] = 0;
            } else {
                keep[x.labels[a] == 0 ? a : b] = 0;
            }
        }
    }
    return keep;
}

}  // namespace

Method method_from_string(const std::string& name) {
    if (name == "ros") return Method::kRos;
    if (name == "rus") return Method::kRus;
    if (name == "smote") return Method::kSmote;
    if (name == "smote_b1") return Method::kSmoteB1;
    if (name == "smote_b2") return Method::kSmoteB2;
    if (name == "adasyn") return Method::kAdasyn;
    if (name == "nearmiss1") return Method::kNearmiss1;
    if (name == "tomek") return Method::kTomek;
    if (name == "enn") return Method::kEnn;
    if (name == "oss") return Method::kOss;
    if (name == "ncr") return Method::kNcr;
    if (name == "smote_enn") return Method::kSmoteEnn;
    if (name == "smote_tl") return Method::kSmoteTl;
    throw ConfigError("unknown resampling method: " + name);
}

std::string to_string(Method method) {
    switch (method) {
        case Method::kRos: return "ros";
        case Method::kRus: return "rus";
        case Method::kSmote: return "smote";
        case Method::kSmoteB1: return "smote_b1";
        case Method::kSmoteB2: return "smote_b2";
        case Method::kAdasyn: return "adasyn";
        case Method::kNearmiss1: return "nearmiss1";
        case Method::kTomek: return "tomek";
        case Method::kEnn: return "enn";
        case Method::kOss: return "oss";
        case Method::kNcr: return "ncr";
        case Method::kSmoteEnn: return "smote_enn";
        case Method::kSmoteTl: return "smote_tl";
    }
    throw ConfigError("unknown resampling method enum value");
}

std::size_t default_k(Method method) {
    switch (method) {
        case Method::kEnn:
        case Method::kNcr:
            return 3;
        default:
            return 5;
    }
}

std::vector<std::size_t> knn_of(const FeatureMatrix& x, std::size_t query,
                                const std::vector<std::size_t>& candidates, std::size_t k) {
    check_matrix(x, "knn_of");
    if (query >= x.rows()) throw DataError("knn_of: query row out of range");
    for (std::size_t c : candidates)
        if (c >= x.rows()) throw DataError("knn_of: candidate row out of range");
    return knn_in(x, query, candidates, k);
}

std::vector<std::vector<std::size_t>> knn_indices(const FeatureMatrix& x,
                                                  const std::vector<std::size_t>& queries,
                                                  std::size_t k, bool exclude_self) {
    check_matrix(x, "knn_indices");
    std::vector<std::vector<std::size_t>> out;
    out.reserve(queries.size());
    std::vector<std::size_t> all(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) all[i] = i;
    for (std::size_t q : queries) {
        if (q >= x.rows()) throw DataError("knn_indices: query row out of range");
        out.push_back(exclude_self ? knn_in(x, q, all_rows_except(x.rows(), q), k)
                                   : knn_in(x, q, all, k));
    }
    return out;
}

FeatureMatrix random_over_sample(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "ros");
    require_both_classes(x, "ros");
    check_ratio(config.target_ratio, "ros");
    const auto pos = rows_with_label(x, 1);
    const auto neg = rows_with_label(x, 0);
    const std::size_t need = oversample_need(pos.size(), neg.size(), config.target_ratio);
    FeatureMatrix out = x;
    std::mt19937_64 rng(derive_seed(config.seed, 1));
    for (std::size_t t = 0; t < need; ++t) append_copy(out, x, pos[pick(rng, pos.size())]);
    return out;
}

FeatureMatrix random_under_sample(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "rus");
    require_both_classes(x, "rus");
    check_ratio(config.target_ratio, "rus");
    const auto pos = rows_with_label(x, 1);
    auto neg = rows_with_label(x, 0);
    const std::size_t kept = undersample_keep(pos.size(), config.target_ratio);
    if (neg.size() <= kept) return x;
    std::mt19937_64 rng(derive_seed(config.seed, 2));
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<char> keep(x.rows(), 0);
    for (std::size_t i : pos) keep[i] = 1;
    for (std::size_t i = 0; i < kept; ++i) keep[neg[i]] = 1;
    return filter_rows(x, keep);
}

FeatureMatrix smote(const FeatureMatrix& x, const SamplerConfig& config, SmoteVariant variant) {
    check_matrix(x, "smote");
    require_both_classes(x, "smote");
    check_ratio(config.target_ratio, "smote");
    const auto pos = rows_with_label(x, 1);
    const auto neg = rows_with_label(x, 0);
    const std::size_t need = oversample_need(pos.size(), neg.size(), config.target_ratio);
    FeatureMatrix out = x;
    if (need == 0) return out;

    // Seed pool: every minority row for the plain variant; only danger rows
    // (strict majority of all-class neighbors hostile, but not all) for the
    // borderline variants.
    std::vector<std::size_t> seeds = pos;
    if (variant != SmoteVariant::kPlain) {
        const std::size_t k_all = clamp_k_warn(config.k_neighbors, x.rows() - 1, "smote");
        const auto hostile = positive_neighbor_counts(x, pos, k_all);
        seeds.clear();
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const std::size_t majority = k_all - hostile[i];
            if (2 * majority > k_all && majority < k_all) seeds.push_back(pos[i]);
        }
        if (seeds.empty()) {
            std::cerr << "warning: smote: no danger rows found, nothing generated\n";
            return out;
        }
    }

    // Interpolation pool per seed row: minority neighbors, except that the
    // second borderline variant draws from all-class neighbors and halves the
    // step when the neighbor is majority.
    const bool mixed_pool = variant == SmoteVariant::kBorderline2;
    std::size_t k_pool;
    if (mixed_pool) {
        k_pool = clamp_k_warn(config.k_neighbors, x.rows() - 1, "smote");
    } else {
        if (pos.size() < 2) throw DataError("smote: need at least two minority rows");
        k_pool = clamp_k_warn(config.k_neighbors, pos.size() - 1, "smote");
    }
    std::vector<std::vector<std::size_t>> pool(x.rows());
    for (std::size_t s : seeds) {
        std::vector<std::size_t> candidates;
        if (mixed_pool) {
            candidates = all_rows_except(x.rows(), s);
        } else {
            for (std::size_t p : pos)
                if (p != s) candidates.push_back(p);
        }
        pool[s] = knn_in(x, s, candidates, k_pool);
    }

    std::mt19937_64 rng(derive_seed(config.seed, 3 + static_cast<std::uint64_t>(variant)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> half(0.0, 0.5);
    for (std::size_t t = 0; t < need; ++t) {
        const std::size_t s = seeds[pick(rng, seeds.size())];
        const std::size_t j = pool[s][pick(rng, pool[s].size())];
        const double gap = (mixed_pool && x.labels[j] == 0) ? half(rng) : unit(rng);
        append_interpolated(out, x, s, j, gap);
    }
    return out;
}

FeatureMatrix adasyn(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "adasyn");
    require_both_classes(x, "adasyn");
    check_ratio(config.target_ratio, "adasyn");
    const auto pos = rows_with_label(x, 1);
    const auto neg = rows_with_label(x, 0);
    const std::size_t need = oversample_need(pos.size(), neg.size(), config.target_ratio);
    FeatureMatrix out = x;
    if (need == 0) return out;

    const std::size_t k_all = clamp_k_warn(config.k_neighbors, x.rows() - 1, "adasyn");
    const auto hostile = positive_neighbor_counts(x, pos, k_all);
    double total = 0.0;
    std::vector<double> ratio(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) {
        ratio[i] = static_cast<double>(k_all - hostile[i]) / static_cast<double>(k_all);
        total += ratio[i];
    }
    if (total == 0.0) {
        std::cerr << "warning: adasyn: no minority row has majority neighbors, "
                     "falling back to plain smote\n";
        return smote(x, config, SmoteVariant::kPlain);
    }

    // Largest-remainder apportionment of the budget across minority rows.
    std::vector<std::size_t> budget(pos.size());
    std::vector<std::pair<double, std::size_t>> remainder;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const double share = static_cast<double>(need) * ratio[i] / total;
        budget[i] = static_cast<std::size_t>(std::floor(share));
        assigned += budget[i];
        remainder.emplace_back(share - std::floor(share), i);
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (std::size_t r = 0; r < need - assigned; ++r) budget[remainder[r].second] += 1;

    if (pos.size() < 2) throw DataError("adasyn: need at least two minority rows");
    const std::size_t k_min = clamp_k_warn(config.k_neighbors, pos.size() - 1, "adasyn");
    std::mt19937_64 rng(derive_seed(config.seed, 6));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (budget[i] == 0) continue;
        std::vector<std::size_t> candidates;
        for (std::size_t p : pos)
            if (p != pos[i]) candidates.push_back(p);
        const auto nn = knn_in(x, pos[i], candidates, k_min);
        for (std::size_t t = 0; t < budget[i]; ++t)
            append_interpolated(out, x, pos[i], nn[pick(rng, nn.size())], unit(rng));
    }
    return out;
}

FeatureMatrix nearmiss1(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "nearmiss1");
    require_both_classes(x, "nearmiss1");
    check_ratio(config.target_ratio, "nearmiss1");
    const auto pos = rows_with_label(x, 1);
    const auto neg = rows_with_label(x, 0);
    const std::size_t kept = undersample_keep(pos.size(), config.target_ratio);
    if (neg.size() <= kept) return x;

    const std::size_t k = std::min(config.k_neighbors, pos.size());
    if (k == 0) throw ConfigError("nearmiss1: k_neighbors must be positive");
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(neg.size());
    for (std::size_t i : neg) {
        const auto nn = knn_in(x, i, pos, k);
        double mean = 0.0;
        for (std::size_t j : nn) mean += std::sqrt(sq_dist(x, i, j));
        mean /= static_cast<double>(nn.size());
        order.emplace_back(mean, i);
    }
    std::sort(order.begin(), order.end());
    std::vector<char> keep(x.rows(), 0);
    for (std::size_t i : pos) keep[i] = 1;
    for (std::size_t r = 0; r < kept; ++r) keep[order[r].second] = 1;
    return filter_rows(x, keep);
}

FeatureMatrix tomek_links(const FeatureMatrix& x, const SamplerConfig&) {
    check_matrix(x, "tomek");
    require_both_classes(x, "tomek");
    return filter_rows(x, tomek_keep_flags(x, false));
}

FeatureMatrix enn(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "enn");
    require_both_classes(x, "enn");
    return filter_rows(x, enn_keep_flags(x, config.k_neighbors, false));
}

FeatureMatrix oss(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "oss");
    require_both_classes(x, "oss");
    const auto neg = rows_with_label(x, 0);

    // One-pass condensation: all minority rows plus one random majority row
    // form the store; every remaining majority row that the store's 1-NN rule
    // misclassifies joins it.
    std::vector<char> in_store(x.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (x.labels[i] == 1) in_store[i] = 1;
    std::mt19937_64 rng(derive_seed(config.seed, 7));
    in_store[neg[pick(rng, neg.size())]] = 1;
    for (std::size_t i : neg) {
        if (in_store[i]) continue;
        std::vector<std::size_t> store;
        for (std::size_t c = 0; c < x.rows(); ++c)
            if (in_store[c]) store.push_back(c);
        const std::size_t nearest = knn_in(x, i, store, 1).front();
        if (x.labels[nearest] != 0) in_store[i] = 1;
    }

    FeatureMatrix condensed = filter_rows(x, in_store);
    return filter_rows(condensed, tomek_keep_flags(condensed, false));
}

FeatureMatrix ncr(const FeatureMatrix& x, const SamplerConfig& config) {
    check_matrix(x, "ncr");
    require_both_classes(x, "ncr");
    const std::size_t k = std::min(config.k_neighbors, x.rows() - 1);
    if (k == 0) throw DataError("ncr: need at least two rows");

    std::vector<char> keep = enn_keep_flags(x, k, false);
    // Additionally drop the majority neighbors that outvote a minority row.
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (x.labels[i] != 1) continue;
        const auto nn = knn_in(x, i, all_rows_except(x.rows(), i), k);
        std::size_t pos = 0;
        for (std::size_t j : nn) pos += static_cast<std::size_t>(x.labels[j] == 1);
        if (2 * pos > k) continue;
        for (std::size_t j : nn)
            if (x.labels[j] == 0) keep[j] = 0;
    }
    return filter_rows(x, keep);
}

FeatureMatrix combined(const FeatureMatrix& x, const SamplerConfig& config, Cleaner cleaner) {
    FeatureMatrix grown = smote(x, config, SmoteVariant::kPlain);
    if (cleaner == Cleaner::kEnn)
        return filter_rows(grown, enn_keep_flags(grown, 3, true));
    return filter_rows(grown, tomek_keep_flags(grown, true));
}

FeatureMatrix flatten(const data::Dataset& data) {
    data::validate(data);
    FeatureMatrix out;
    out.cols = data.channel_count * data.length;
    out.values.reserve(data.size() * out.cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& sample = data.samples[i];
        out.values.insert(out.values.end(), sample.values.begin(), sample.values.end());
        out.labels.push_back(sample.label);
        Origin mark;
        mark.index = i;
        out.origin.push_back(mark);
    }
    return out;
}

data::Dataset unflatten(const FeatureMatrix& x, const data::Dataset& source) {
    check_matrix(x, "unflatten");
    if (x.cols != source.channel_count * source.length)
        throw DataError("unflatten: column count does not match source geometry");
    data::Dataset out;
    out.channel_count = source.channel_count;
    out.length = source.length;
    out.samples.reserve(x.rows());
    std::size_t synth_count = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        data::TimeSeriesSample sample;
        sample.values.assign(x.row(i), x.row(i) + x.cols);
        sample.label = x.labels[i];
        if (x.origin[i].synthetic) {
            sample.id = "syn" + std::to_string(synth_count++);
        } else {
            if (x.origin[i].index >= source.size())
                throw DataError("unflatten: origin index out of range");
            sample.id = source.samples[x.origin[i].index].id;
        }
        out.samples.push_back(std::move(sample));
    }
    return out;
}

data::Dataset resample_dataset(const data::Dataset& data, const SamplerConfig& config) {
    const FeatureMatrix x = flatten(data);
    FeatureMatrix result;
    switch (config.method) {
        case Method::kRos: result = random_over_sample(x, config); break;
        case Method::kRus: result = random_under_sample(x, config); break;
        case Method::kSmote: result = smote(x, config, SmoteVariant::kPlain); break;
        case Method::kSmoteB1: result = smote(x, config, SmoteVariant::kBorderline1); break;
        case Method::kSmoteB2: result = smote(x, config, SmoteVariant::kBorderline2); break;
        case Method::kAdasyn: result = adasyn(x, config); break;
        case Method::kNearmiss1: result = nearmiss1(x, config); break;
        case Method::kTomek: result = tomek_links(x, config); break;
        case Method::kEnn: result = enn(x, config); break;
        case Method::kOss: result = oss(x, config); break;
        case Method::kNcr: result = ncr(x, config); break;
        case Method::kSmoteEnn: result = combined(x, config, Cleaner::kEnn); break;
        case Method::kSmoteTl: result = combined(x, config, Cleaner::kTomek); break;
    }
    return unflatten(result, data);
}

}  // namespace itsc::resample
