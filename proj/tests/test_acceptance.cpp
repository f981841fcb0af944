// Release acceptance checks. Each numbered block verifies one gate end to
// end and prints exactly one PASS or FAIL line; the process exits nonzero
// if any gate fails.

#include <json.hpp>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fd_check.hpp"
#include "itsc/common.hpp"
#include "itsc/cost_loss.hpp"
#include "itsc/dataset.hpp"
#include "itsc/harness.hpp"
#include "itsc/layers.hpp"
#include "itsc/metrics.hpp"
#include "itsc/models.hpp"
#include "itsc/resampling.hpp"
#include "itsc/tensor.hpp"

using nlohmann::json;
using namespace itsc;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    explicit Failure(const std::string& what) : std::runtime_error(what) {}
};

void require(bool condition, const std::string& message) {
    if (!condition) throw Failure(message);
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ------------------------------------------------------------------ helpers

// Random tensor whose entries are a shuffled even grid over [-2, 2]: every
// pair of entries is well separated, so relu and max-pool stay away from
// their kinks under finite-difference probes.
nn::Tensor spaced_input(std::vector<std::size_t> shape, std::mt19937_64& rng) {
    nn::Tensor t(std::move(shape));
    const std::size_t n = t.size();
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = -2.0 + 4.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    }
    std::shuffle(grid.begin(), grid.end(), rng);
    bool near_zero = false;
    for (double v : grid) near_zero = near_zero || std::abs(v) < 1e-3;
    if (near_zero) {
        for (double& v : grid) v += 2.5e-3;
    }
    t.data = std::move(grid);
    return t;
}

std::size_t pick_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double pick_real(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Central-difference check of a scalar loss of a logit vector against its
// analytic gradient; returns the worst relative error.
double scalar_chain_err(const std::function<double(const std::vector<double>&)>& loss,
                        std::vector<double> logits, const std::vector<double>& analytic) {
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double saved = logits[i];
        logits[i] = saved + h;
        const double up = loss(logits);
        logits[i] = saved - h;
        const double down = loss(logits);
        logits[i] = saved;
        worst = std::max(worst, fdcheck::rel_err(analytic[i], (up - down) / (2.0 * h)));
    }
    return worst;
}

std::vector<int> random_two_class_labels(std::size_t n, std::mt19937_64& rng) {
    std::vector<int> labels(n);
    for (int& y : labels) y = pick_size(rng, 0, 1) == 1 ? 1 : 0;
    labels[0] = 1;
    labels[1 % n] = 0;
    return labels;
}

// Two overlapping 2-d gaussian blobs; labels 0 (majority, around the origin)
// and 1 (minority, around (3, 3)).
resample::FeatureMatrix blob_matrix(std::size_t n_neg, std::size_t n_pos, double spread,
                                    std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    resample::FeatureMatrix x;
    x.cols = 2;
    for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
        const bool minority = i >= n_neg;
        x.values.push_back((minority ? 3.0 : 0.0) + noise(rng));
        x.values.push_back((minority ? 3.0 : 0.0) + noise(rng));
        x.labels.push_back(minority ? 1 : 0);
        resample::Origin mark;
        mark.index = i;
        x.origin.push_back(mark);
    }
    return x;
}

double sqdist(const resample::FeatureMatrix& x, std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
        const double d = x.row(a)[c] - x.row(b)[c];
        s += d * d;
    }
    return s;
}

std::set<std::size_t> removed_rows(const resample::FeatureMatrix& before,
                                   const resample::FeatureMatrix& after) {
    std::set<std::size_t> kept;
    for (const auto& mark : after.origin) {
        require(!mark.synthetic, "cleaning output must not contain synthetic rows");
        kept.insert(mark.index);
    }
    std::set<std::size_t> removed;
    for (std::size_t i = 0; i < before.rows(); ++i) {
        if (kept.count(i) == 0) removed.insert(i);
    }
    return removed;
}

std::size_t count_label(const resample::FeatureMatrix& x, int label) {
    std::size_t n = 0;
    for (int y : x.labels) n += static_cast<std::size_t>(y == label);
    return n;
}

data::Dataset constant_dataset(std::size_t n_neg, std::size_t n_pos) {
    data::Dataset out;
    out.channel_count = 1;
    out.length = 1;
    out.samples.reserve(n_neg + n_pos);
    for (std::size_t i = 0; i < n_neg + n_pos; ++i) {
        data::TimeSeriesSample s;
        s.label = i < n_neg ? 0 : 1;
        s.id = "s" + std::to_string(i);
        s.values = {0.0};
        out.samples.push_back(std::move(s));
    }
    return out;
}

data::Dataset subset_of(const data::Dataset& data, const std::vector<std::size_t>& indices) {
    data::Dataset out;
    out.channel_count = data.channel_count;
    out.length = data.length;
    for (std::size_t i : indices) out.samples.push_back(data.samples.at(i));
    return out;
}

bool same_metric(const metrics::Metric& a, const metrics::Metric& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || *a == *b;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return values[values.size() / 2];
}

int run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------- gate 1

void check_gradients() {
    const auto start = std::chrono::steady_clock::now();
    constexpr std::size_t kTrials = 100;
    constexpr double kLayerTol = 1e-4;

    auto expect = [&](const fdcheck::FdResult& r, const char* what, std::size_t trial) {
        require(r.checked > 0, std::string(what) + ": no partial derivatives checked");
        require(r.max_err <= kLayerTol,
                std::string(what) + " trial " + std::to_string(trial) + ": worst error " +
                    std::to_string(r.max_err));
    };

    for (std::size_t t = 0; t < kTrials; ++t) {
        std::mt19937_64 rng(derive_seed(900, t));

        {
            const std::size_t in_features = pick_size(rng, 1, 6);
            nn::Dense layer(in_features, pick_size(rng, 1, 4), rng, "d");
            auto input = spaced_input({pick_size(rng, 1, 4), in_features}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()), "dense",
                   t);
        }
        {
            const std::size_t cin = pick_size(rng, 1, 3);
            const std::size_t k = pick_size(rng, 1, 3);
            nn::Conv1d layer(cin, pick_size(rng, 1, 3), k, pick_size(rng, 1, 2),
                             pick_size(rng, 0, 1) ? nn::Padding::kSame : nn::Padding::kValid, rng,
                             "c");
            auto input = spaced_input({pick_size(rng, 1, 3), cin, k + pick_size(rng, 0, 4)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()),
                   "conv1d", t);
        }
        {
            const std::size_t pool = pick_size(rng, 1, 3);
            nn::MaxPool1d layer(pool, pick_size(rng, 1, 3));
            auto input = spaced_input(
                {pick_size(rng, 1, 3), pick_size(rng, 1, 3), pool + pick_size(rng, 0, 5)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng(), 1e-6),
                   "max_pool1d", t);
        }
        {
            nn::GlobalAvgPool1d layer;
            auto input = spaced_input(
                {pick_size(rng, 1, 3), pick_size(rng, 1, 3), pick_size(rng, 1, 6)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()),
                   "global_avg_pool1d", t);
        }
        {
            const std::size_t channels = pick_size(rng, 1, 3);
            nn::BatchNorm1d layer(channels, 0.9, 1e-5, "bn");
            auto input = spaced_input(
                {pick_size(rng, 2, 4), channels, pick_size(rng, 2, 5)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()),
                   "batch_norm1d train", t);
            auto warm = spaced_input({3, channels, 4}, rng);
            layer.forward(warm, nn::Mode::kTrain);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kEval, rng()),
                   "batch_norm1d eval", t);
        }
        {
            nn::Relu layer;
            auto input = spaced_input(
                {pick_size(rng, 1, 3), pick_size(rng, 1, 3), pick_size(rng, 1, 6)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()), "relu",
                   t);
        }
        {
            nn::Sigmoid layer;
            auto input = spaced_input({pick_size(rng, 1, 4), pick_size(rng, 1, 6)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()),
                   "sigmoid", t);
        }
        {
            nn::Dropout layer(pick_real(rng, 0.1, 0.8), rng());
            auto input = spaced_input({pick_size(rng, 1, 4), pick_size(rng, 1, 6)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kEval, rng()),
                   "dropout eval", t);
            nn::Dropout pass_through(0.0, rng());
            expect(fdcheck::check_layer_gradients(pass_through, input, nn::Mode::kTrain, rng()),
                   "dropout rate 0", t);
        }
        {
            nn::Flatten layer;
            auto input = spaced_input(
                {pick_size(rng, 1, 3), pick_size(rng, 1, 3), pick_size(rng, 1, 6)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()),
                   "flatten", t);
        }
        {
            const std::size_t channels = pick_size(rng, 1, 3);
            nn::Lstm layer(channels, pick_size(rng, 1, 3), rng, "l");
            auto input = spaced_input(
                {pick_size(rng, 1, 3), channels, pick_size(rng, 2, 5)}, rng);
            expect(fdcheck::check_layer_gradients(layer, input, nn::Mode::kTrain, rng()), "lstm",
                   t);
        }
    }

    // Residual and concat plumbing is linear; gradients pass through exactly.
    for (std::size_t t = 0; t < 20; ++t) {
        std::mt19937_64 rng(derive_seed(901, t));
        auto x = spaced_input({2, 3, 4}, rng);
        auto y = spaced_input({2, 3, 4}, rng);
        const auto sum = nn::residual_add(x, y);
        for (std::size_t i = 0; i < sum.size(); ++i) {
            require(sum.data[i] == x.data[i] + y.data[i], "residual_add is not elementwise");
        }
        auto g = spaced_input({2, 3, 4}, rng);
        require(nn::residual_add_backward_x(g).data == g.data, "residual grad x must pass through");
        require(nn::residual_add_backward_y(g).data == g.data, "residual grad y must pass through");

        auto a = spaced_input({2, 3}, rng);
        auto b = spaced_input({2, 5}, rng);
        const auto cat = nn::concat_features(a, b);
        auto upstream = spaced_input({2, 8}, rng);
        nn::Tensor ga, gb;
        nn::split_features(upstream, 3, ga, gb);
        for (std::size_t r = 0; r < 2; ++r) {
            for (std::size_t c = 0; c < 3; ++c) {
                require(cat.at(r, c) == a.at(r, c) && ga.at(r, c) == upstream.at(r, c),
                        "concat/split mismatch on the left block");
            }
            for (std::size_t c = 0; c < 5; ++c) {
                require(cat.at(r, 3 + c) == b.at(r, c) && gb.at(r, c) == upstream.at(r, 3 + c),
                        "concat/split mismatch on the right block");
            }
        }
    }

    // Composed scalar chains: logits -> sigmoid -> per-instance weighted
    // cross-entropy -> batch reduction, against the analytic logit gradient.
    constexpr double kChainTol = 1e-6;
    for (std::size_t t = 0; t < kTrials; ++t) {
        std::mt19937_64 rng(derive_seed(902, t));
        const std::size_t n = pick_size(rng, 2, 12);
        const auto labels = random_two_class_labels(n, rng);
        std::vector<double> logits(n);
        for (double& z : logits) z = pick_real(rng, -3.0, 3.0);
        auto probs_of = [](const std::vector<double>& z) {
            std::vector<double> p(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) p[i] = nn::stable_sigmoid(z[i]);
            return p;
        };

        const double lp = pick_real(rng, 0.5, 50.0);
        const double ln = pick_real(rng, 0.5, 50.0);
        auto balanced = [&](const std::vector<double>& z) {
            const auto probs = probs_of(z);
            std::vector<double> losses(probs.size());
            for (std::size_t i = 0; i < probs.size(); ++i) {
                losses[i] = cost::weighted_bce(probs[i], labels[i], lp, ln);
            }
            return cost::class_balanced_loss(losses, labels);
        };
        const double err_balanced =
            scalar_chain_err(balanced, logits, cost::loss_gradient(probs_of(logits), labels, lp, ln));
        require(err_balanced <= kChainTol, "class-balanced chain trial " + std::to_string(t) +
                                               ": worst error " + std::to_string(err_balanced));

        const double w = pick_real(rng, 1.0, 50.0);
        auto mean_bce = [&](const std::vector<double>& z) {
            return cost::weighted_mean_bce(probs_of(z), labels, w);
        };
        const double err_mean = scalar_chain_err(
            mean_bce, logits, cost::weighted_mean_bce_gradient(probs_of(logits), labels, w));
        require(err_mean <= kChainTol, "mean bce chain trial " + std::to_string(t) +
                                           ": worst error " + std::to_string(err_mean));
    }

    const double seconds = elapsed_since(start);
    require(seconds <= 120.0,
            "gradient suite took " + std::to_string(seconds) + "s (budget 120s)");
}

// ---------------------------------------------------------------- gate 2

void check_lambda_contract() {
    std::mt19937_64 rng(2024);
    const double inv_e = std::exp(-1.0);
    for (std::size_t t = 0; t < 10000; ++t) {
        const double ir = pick_real(rng, 1.0, 100.0);
        const double g = pick_real(rng, 0.0, 0.999);
        const double a = pick_real(rng, 0.0, 0.999);
        const auto state = cost::update_lambda(ir, g, a);
        require(state.lambda_majority == 1.0, "majority weight must stay 1");
        require(state.lambda_minority <= ir * (1.0 + 1e-12) &&
                    state.lambda_minority >= ir * inv_e * (1.0 - 1e-12),
                "weight left the [ir/e, ir] band");

        const double dg = pick_real(rng, 1e-6, 1.0 - g);
        const double da = pick_real(rng, 1e-6, 1.0 - a);
        require(cost::update_lambda(ir, g + dg, a).lambda_minority < state.lambda_minority,
                "weight must strictly decrease in batch gmean");
        require(cost::update_lambda(ir, g, a + da).lambda_minority < state.lambda_minority,
                "weight must strictly decrease in batch accuracy");
    }

    const auto floor_state = cost::update_lambda(43.9379, 0.0, 0.0);
    require(std::abs(floor_state.lambda_minority - 43.9379) <= 1e-3,
            "weight at (gmean 0, acc 0) must equal the imbalance ratio");
    const auto cap_state = cost::update_lambda(43.9379, 1.0, 1.0);
    require(std::abs(cap_state.lambda_minority - 43.9379 * inv_e) <= 1e-3,
            "weight at (gmean 1, acc 1) must equal ratio/e");

    const auto undefined = cost::update_lambda(7.0, std::nullopt, 0.25);
    const auto zero = cost::update_lambda(7.0, 0.0, 0.25);
    require(undefined.lambda_minority == zero.lambda_minority,
            "an undefined batch gmean must count as zero");
}

// ---------------------------------------------------------------- gate 3

void check_metric_oracles() {
    std::mt19937_64 rng(3030);

    for (std::size_t t = 0; t < 1000; ++t) {
        metrics::ConfusionCounts c;
        c.tp = pick_size(rng, 0, 1000000);
        c.fn = pick_size(rng, 0, 1000000);
        c.fp = pick_size(rng, 0, 1000000);
        c.tn = pick_size(rng, 0, 1000000);
        const auto m = metrics::compute_metrics(c);

        auto ratio = [](std::size_t num, std::size_t den) -> metrics::Metric {
            if (den == 0) return std::nullopt;
            return static_cast<double>(num) / static_cast<double>(den);
        };
        const auto acc = ratio(c.tp + c.tn, c.tp + c.fn + c.fp + c.tn);
        const auto tpr = ratio(c.tp, c.tp + c.fn);
        const auto tnr = ratio(c.tn, c.tn + c.fp);
        const auto fpr = ratio(c.fp, c.fp + c.tn);
        const auto prec = ratio(c.tp, c.tp + c.fp);
        metrics::Metric f1;
        if (prec && tpr && *prec + *tpr > 0.0) f1 = 2.0 * *prec * *tpr / (*prec + *tpr);
        metrics::Metric gmean;
        if (tpr && tnr) gmean = std::sqrt(*tpr * *tnr);

        require(same_metric(m.accuracy, acc) && same_metric(m.tpr, tpr) &&
                    same_metric(m.tnr, tnr) && same_metric(m.fpr, fpr) &&
                    same_metric(m.precision, prec) && same_metric(m.f1, f1) &&
                    same_metric(m.gmean, gmean),
                "threshold metrics disagree with the hand formulas at trial " + std::to_string(t));
    }

    for (std::size_t t = 0; t < 300; ++t) {
        const std::size_t n = pick_size(rng, 2, 200);
        auto labels = random_two_class_labels(n, rng);
        std::vector<double> scores(n);
        const bool quantized = pick_size(rng, 0, 1) == 1;
        for (double& s : scores) {
            s = pick_real(rng, 0.0, 1.0);
            if (quantized) s = std::round(s * 10.0) / 10.0;
        }
        const auto auc = metrics::roc_auc(labels, scores);
        require(auc.has_value(), "roc auc must be defined with both classes present");

        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                if (scores[i] > scores[j]) wins += 1.0;
                if (scores[i] == scores[j]) wins += 0.5;
            }
        }
        const double oracle = wins / static_cast<double>(pairs);
        require(std::abs(*auc - oracle) <= 1e-12,
                "roc auc differs from the pairwise oracle at trial " + std::to_string(t));
    }

    for (std::size_t t = 0; t < 1000; ++t) {
        const std::size_t n = pick_size(rng, 2, 40);
        auto labels = random_two_class_labels(n, rng);
        std::vector<double> scores(n);
        const bool quantized = pick_size(rng, 0, 1) == 1;
        for (double& s : scores) {
            s = pick_real(rng, 0.0, 1.0);
            if (quantized) s = std::round(s * 4.0) / 4.0;
        }
        const auto ap = metrics::pr_auc(labels, scores);
        require(ap.has_value(), "pr auc must be defined with a positive present");

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        const double total_pos =
            static_cast<double>(std::count(labels.begin(), labels.end(), 1));
        double oracle = 0.0;
        double recall_prev = 0.0;
        std::size_t tp = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (labels[order[k]] != 1) continue;
            ++tp;
            const double recall = static_cast<double>(tp) / total_pos;
            const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
            oracle += (recall - recall_prev) * precision;
            recall_prev = recall;
        }
        require(std::abs(*ap - oracle) <= 1e-12,
                "pr auc differs from the stepwise trace at trial " + std::to_string(t));
    }
}

// ---------------------------------------------------------------- gate 4

void check_sampler_oracles() {
    for (std::uint64_t seed : {11, 12, 13}) {
        for (std::size_t n_neg : {40ul, 110ul, 160ul}) {
            const auto x = blob_matrix(n_neg, 40, 1.2, seed);

            std::vector<std::size_t> nn1(x.rows());
            for (std::size_t i = 0; i < x.rows(); ++i) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t arg = i;
                for (std::size_t j = 0; j < x.rows(); ++j) {
                    if (j == i) continue;
                    const double d = sqdist(x, i, j);
                    if (d < best || (d == best && j < arg)) {
                        best = d;
                        arg = j;
                    }
                }
                nn1[i] = arg;
            }
            std::set<std::size_t> tomek_expected;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                const std::size_t j = nn1[i];
                if (nn1[j] == i && x.labels[i] != x.labels[j]) {
                    tomek_expected.insert(x.labels[i] == 0 ? i : j);
                }
            }
            resample::SamplerConfig cfg;
            cfg.method = resample::Method::kTomek;
            const auto tomek_removed = removed_rows(x, resample::tomek_links(x, cfg));
            require(tomek_removed == tomek_expected,
                    "tomek removals differ from brute force at n=" + std::to_string(x.rows()));

            const std::size_t k = 3;
            std::set<std::size_t> enn_expected;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                if (x.labels[i] != 0) continue;
                std::vector<std::pair<double, std::size_t>> dists;
                for (std::size_t j = 0; j < x.rows(); ++j) {
                    if (j != i) dists.emplace_back(sqdist(x, i, j), j);
                }
                std::sort(dists.begin(), dists.end());
                std::size_t hostile = 0;
                for (std::size_t r = 0; r < k; ++r) {
                    hostile += static_cast<std::size_t>(x.labels[dists[r].second] != 0);
                }
                if (2 * hostile > k) enn_expected.insert(i);
            }
            resample::SamplerConfig enn_cfg;
            enn_cfg.method = resample::Method::kEnn;
            enn_cfg.k_neighbors = k;
            const auto enn_removed = removed_rows(x, resample::enn(x, enn_cfg));
            require(enn_removed == enn_expected,
                    "enn removals differ from brute force at n=" + std::to_string(x.rows()));
        }
    }

    const auto x = blob_matrix(80, 25, 1.2, 21);
    resample::SamplerConfig cfg;
    cfg.k_neighbors = 5;
    cfg.target_ratio = 1.0;
    cfg.seed = 9;

    auto check_convex = [&](const resample::FeatureMatrix& out, const char* what) {
        std::size_t synthetic = 0;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            const auto& mark = out.origin[i];
            if (!mark.synthetic) continue;
            ++synthetic;
            require(mark.parent_a < x.rows() && mark.parent_b < x.rows(),
                    std::string(what) + ": synthetic parents out of range");
            require(mark.gap >= 0.0 && mark.gap < 1.0,
                    std::string(what) + ": interpolation gap out of [0, 1)");
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double pa = x.row(mark.parent_a)[c];
                const double pb = x.row(mark.parent_b)[c];
                const double expected = pa + mark.gap * (pb - pa);
                require(std::abs(out.row(i)[c] - expected) <= 1e-12,
                        std::string(what) + ": synthetic point is not on the parent segment");
                require(out.row(i)[c] >= std::min(pa, pb) - 1e-12 &&
                            out.row(i)[c] <= std::max(pa, pb) + 1e-12,
                        std::string(what) + ": synthetic point outside the parent span");
            }
        }
        return synthetic;
    };

    const auto plain = resample::smote(x, cfg, resample::SmoteVariant::kPlain);
    require(check_convex(plain, "smote") > 0, "smote produced no synthetics");
    check_convex(resample::smote(x, cfg, resample::SmoteVariant::kBorderline1), "borderline1");
    check_convex(resample::smote(x, cfg, resample::SmoteVariant::kBorderline2), "borderline2");
    const auto ada = resample::adasyn(x, cfg);
    require(check_convex(ada, "adasyn") > 0, "adasyn produced no synthetics");

    auto balanced = [](const resample::FeatureMatrix& out) {
        return count_label(out, 1) == count_label(out, 0);
    };
    cfg.method = resample::Method::kRos;
    require(balanced(resample::random_over_sample(x, cfg)), "ros missed the 1.0 target ratio");
    cfg.method = resample::Method::kRus;
    require(balanced(resample::random_under_sample(x, cfg)), "rus missed the 1.0 target ratio");
    require(balanced(plain), "smote missed the 1.0 target ratio");
    require(balanced(ada), "adasyn missed the 1.0 target ratio");
    cfg.method = resample::Method::kNearmiss1;
    require(balanced(resample::nearmiss1(x, cfg)), "nearmiss1 missed the 1.0 target ratio");
}

// ---------------------------------------------------------------- gate 5

void check_imbalance_arithmetic() {
    const double first = data::imbalance_ratio(constant_dataset(130188, 2963));
    require(std::abs(first - 43.9379) <= 5e-5,
            "130188:2963 gave " + std::to_string(first) + ", expected 43.9379");
    const double second = data::imbalance_ratio(constant_dataset(3664, 196));
    require(std::abs(second - 18.6939) <= 5e-5,
            "3664:196 gave " + std::to_string(second) + ", expected 18.6939");
}

// ---------------------------------------------------------------- gate 6

void check_training_ordering() {
    const auto start = std::chrono::steady_clock::now();

    data::SynthConfig synth;
    synth.n_neg = 2000;
    synth.n_pos = 100;
    synth.channels = 3;
    synth.length = 64;
    synth.noise_std = 1.0;
    synth.seed = 1234;
    const auto dataset = data::synth_generate(synth);

    const std::map<std::string, double> overrides = {
        {"filters1", 8}, {"filters2", 8}, {"filters3", 8}, {"kernel1", 5}, {"kernel2", 5},
        {"kernel3", 3},  {"pool", 2},     {"dense", 16},   {"dropout", 0.0}};

    std::vector<double> cost_gmeans;
    std::vector<double> plain_gmeans;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        harness::TrainConfig config;
        config.mode = harness::TrainMode::kCostSensitive;
        config.epochs = 25;
        config.batch_size = 32;
        config.seed = seed;
        config.adam.learning_rate = 0.003;
        const auto cost_report =
            harness::run_cross_validation(dataset, models::ModelKind::kCnn, overrides, config, 2);
        for (const auto& fold : cost_report.folds) {
            require(fold.metrics.recall.has_value(),
                    "cost-sensitive cnn recall undefined in fold " +
                        std::to_string(fold.fold_index) + " at seed " + std::to_string(seed));
        }
        cost_gmeans.push_back(cost_report.aggregates.at("gmean").mean.value_or(0.0));

        config.mode = harness::TrainMode::kPlain;
        const auto plain_report =
            harness::run_cross_validation(dataset, models::ModelKind::kCnn, overrides, config, 2);
        plain_gmeans.push_back(plain_report.aggregates.at("gmean").mean.value_or(0.0));
    }

    const double gap = median_of(cost_gmeans) - median_of(plain_gmeans);
    require(gap >= 0.10, "median gmean gap " + std::to_string(gap) + " is below 0.10");

    const double seconds = elapsed_since(start);
    require(seconds <= 900.0,
            "training comparison took " + std::to_string(seconds) + "s (budget 900s)");
}

// ---------------------------------------------------------------- gate 7

void check_mode_equivalences() {
    const auto neutral = cost::update_lambda(1.0, 0.0, 0.0);
    require(neutral.lambda_minority == 1.0 && neutral.lambda_majority == 1.0,
            "ratio 1 with zeroed statistics must give unit weights");

    std::mt19937_64 rng(7070);
    for (std::size_t t = 0; t < 1000; ++t) {
        const std::size_t n = pick_size(rng, 2, 24);
        const auto labels = random_two_class_labels(n, rng);
        std::vector<double> probs(n);
        for (double& p : probs) p = pick_real(rng, 0.01, 0.99);

        std::vector<double> weighted(n);
        std::vector<double> plain(n);
        for (std::size_t i = 0; i < n; ++i) {
            weighted[i] = cost::weighted_bce(probs[i], labels[i], neutral);
            plain[i] = cost::weighted_bce(probs[i], labels[i], 1.0, 1.0);
            require(weighted[i] == plain[i],
                    "unit-weight instance loss must match the plain loss bit for bit");
        }
        require(cost::class_balanced_loss(weighted, labels) ==
                    cost::class_balanced_loss(plain, labels),
                "unit-weight batch loss must match the plain loss bit for bit");
        require(cost::loss_gradient(probs, labels, neutral) ==
                    cost::loss_gradient(probs, labels, 1.0, 1.0),
                "unit-weight gradients must match the plain gradients bit for bit");

        const double mean = cost::weighted_mean_bce(probs, labels, 1.0);
        double oracle = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            oracle += labels[i] == 1 ? -std::log(probs[i]) : -std::log(1.0 - probs[i]);
        }
        oracle /= static_cast<double>(n);
        require(std::abs(mean - oracle) <= 1e-15,
                "unit pos_weight mean bce must match the standard cross-entropy");
    }
}

// ---------------------------------------------------------------- gate 8

void check_determinism() {
    const char* cli = std::getenv("ITSC_CLI");
    require(cli != nullptr, "ITSC_CLI must point at the built command-line binary");
    const fs::path dir = fs::temp_directory_path() / "itsc_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const json gen = {{"version", 1},
                      {"synth",
                       {{"n_pos", 16},
                        {"n_neg", 80},
                        {"channels", 1},
                        {"length", 12},
                        {"noise_std", 0.8},
                        {"seed", 11}}},
                      {"out", "toy.csv"}};
    const json run = {{"version", 1},
                      {"model", "mlp"},
                      {"mode", "cost_sensitive"},
                      {"overrides", {{"hidden1", 8}, {"hidden2", 8}, {"hidden3", 8}}},
                      {"data", {{"csv", "toy.csv"}}},
                      {"folds", 2},
                      {"epochs", 2},
                      {"batch_size", 32},
                      {"lr", 0.005},
                      {"seed", 5}};
    std::ofstream(dir / "gen.json") << gen.dump(2);
    std::ofstream(dir / "run.json") << run.dump(2);

    auto invoke = [&](const std::string& args) {
        return run_command("cd '" + dir.string() + "' && '" + std::string(cli) + "' " + args +
                           " >/dev/null 2>&1");
    };
    require(invoke("generate --config gen.json") == 0, "dataset generation failed");
    require(invoke("run --config run.json --out rep1.json") == 0, "first run failed");
    require(invoke("run --config run.json --out rep2.json") == 0, "second run failed");

    json rep1, rep2;
    std::ifstream(dir / "rep1.json") >> rep1;
    std::ifstream(dir / "rep2.json") >> rep2;
    require(rep1.contains("timing") && rep2.contains("timing"), "reports must carry timing");
    rep1.erase("timing");
    rep2.erase("timing");
    require(rep1 == rep2, "repeated runs differ outside the timing block");

    data::SynthConfig synth;
    synth.n_neg = 200;
    synth.n_pos = 40;
    synth.channels = 1;
    synth.length = 12;
    synth.noise_std = 1.0;
    synth.seed = 77;
    const auto dataset = data::synth_generate(synth);
    const std::map<std::string, double> overrides = {
        {"hidden1", 10}, {"hidden2", 8}, {"hidden3", 8}};
    harness::TrainConfig config;
    config.mode = harness::TrainMode::kCostSensitive;
    config.epochs = 2;
    config.batch_size = 32;
    config.seed = 3;

    const auto serial =
        harness::run_cross_validation(dataset, models::ModelKind::kMlp, overrides, config, 4, false);
    const auto threaded =
        harness::run_cross_validation(dataset, models::ModelKind::kMlp, overrides, config, 4, true);
    require(serial.folds.size() == threaded.folds.size(), "fold counts differ across schedules");
    for (std::size_t i = 0; i < serial.folds.size(); ++i) {
        const auto& a = serial.folds[i];
        const auto& b = threaded.folds[i];
        const auto named_a = harness::named_metrics(a.metrics);
        const auto named_b = harness::named_metrics(b.metrics);
        for (std::size_t m = 0; m < named_a.size(); ++m) {
            require(same_metric(named_a[m].second, named_b[m].second),
                    "fold metric " + named_a[m].first + " differs across schedules");
        }
        require(a.metrics.counts.tp == b.metrics.counts.tp &&
                    a.metrics.counts.fn == b.metrics.counts.fn &&
                    a.metrics.counts.fp == b.metrics.counts.fp &&
                    a.metrics.counts.tn == b.metrics.counts.tn,
                "confusion counts differ across schedules");
        require(a.log.epoch_loss == b.log.epoch_loss, "epoch losses differ across schedules");
        require(a.log.batches.size() == b.log.batches.size(),
                "batch record counts differ across schedules");
        for (std::size_t r = 0; r < a.log.batches.size(); ++r) {
            require(a.log.batches[r].loss == b.log.batches[r].loss &&
                        a.log.batches[r].lambda_minority == b.log.batches[r].lambda_minority,
                    "batch records differ across schedules");
        }
    }
    for (const auto& [name, stats] : serial.aggregates) {
        const auto& other = threaded.aggregates.at(name);
        require(same_metric(stats.mean, other.mean) && same_metric(stats.stddev, other.stddev),
                "aggregate " + name + " differs across schedules");
    }
}

// ---------------------------------------------------------------- gate 9

void check_leakage_guards() {
    data::SynthConfig synth;
    synth.n_neg = 300;
    synth.n_pos = 60;
    synth.channels = 1;
    synth.length = 12;
    synth.noise_std = 1.0;
    synth.seed = 99;
    const auto dataset = data::synth_generate(synth);
    const std::map<std::string, double> overrides = {
        {"hidden1", 10}, {"hidden2", 8}, {"hidden3", 8}};

    for (const bool sampled : {false, true}) {
        harness::TrainConfig config;
        config.epochs = 1;
        config.batch_size = 64;
        config.seed = 13;
        if (sampled) {
            config.mode = harness::TrainMode::kSampled;
            resample::SamplerConfig sampler;
            sampler.method = resample::Method::kSmote;
            config.sampler = sampler;
        } else {
            config.mode = harness::TrainMode::kCostSensitive;
        }

        const std::size_t folds = 5;
        const auto report = harness::run_cross_validation(dataset, models::ModelKind::kMlp,
                                                          overrides, config, folds);
        const auto splits = data::stratified_kfold(dataset, folds, derive_seed(config.seed, 7));
        require(report.folds.size() == folds, "fold count mismatch");

        for (std::size_t i = 0; i < folds; ++i) {
            const auto& fold = report.folds[i];
            require(fold.validation_ir.has_value() && fold.raw_fold_ir.has_value(),
                    "fold imbalance ratios must be defined");
            require(*fold.validation_ir == *fold.raw_fold_ir,
                    "validation imbalance ratio drifted from the raw split");

            const auto val = subset_of(dataset, splits[i].validation_indices);
            require(*fold.validation_ir == data::imbalance_ratio(val),
                    "validation imbalance ratio does not match the recomputed split");

            const auto train = subset_of(dataset, splits[i].train_indices);
            const auto [normalized, stats] = data::zscore_fit_transform(train);
            (void)normalized;
            require(stats.mean == fold.stats.mean && stats.stddev == fold.stats.stddev,
                    "normalization statistics were not fit on the training split alone");
        }
    }
}

}  // namespace

int main() {
    struct Gate {
        int number;
        const char* name;
        std::function<void()> body;
    };
    const std::vector<Gate> gates = {
        {1, "layer and loss gradients match central differences", check_gradients},
        {2, "adaptive minority weight stays in band and reacts monotonically",
         check_lambda_contract},
        {3, "threshold metrics and both aucs match independent oracles", check_metric_oracles},
        {4, "samplers match brute force, stay convex and hit target ratios",
         check_sampler_oracles},
        {5, "imbalance ratio arithmetic on reference class counts", check_imbalance_arithmetic},
        {6, "cost-sensitive cnn beats plain cnn on the reference synthetic task",
         check_training_ordering},
        {7, "unit weights reproduce the unweighted losses", check_mode_equivalences},
        {8, "repeated and concurrent runs are bit-identical", check_determinism},
        {9, "no validation leakage into fold statistics", check_leakage_guards},
    };

    int failures = 0;
    for (const auto& gate : gates) {
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            gate.body();
        } catch (const std::exception& e) {
            error = e.what();
        }
        std::ostringstream line;
        line.setf(std::ios::fixed);
        line.precision(3);
        if (error.empty()) {
            line << "PASS " << gate.number << "/9 " << gate.name << " ("
                 << elapsed_since(start) << "s)";
        } else {
            ++failures;
            line << "FAIL " << gate.number << "/9 " << gate.name << ": " << error;
        }
        std::cout << line.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
