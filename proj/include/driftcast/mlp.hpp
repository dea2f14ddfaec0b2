#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/features.hpp"
#include "driftcast/log.hpp"
#include "driftcast/rng.hpp"

namespace driftcast {

struct MlpConfig {
    std::size_t hidden_units = 128;
    double dropout_rate = 0.5;  // train/update passes only
    double learning_rate = 1e-3;
    double lr_decay = 0.95;  // per-epoch multiplicative decay within one train/update call
    int epochs_train = 30;
    int epochs_update = 5;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;

    bool operator==(const MlpConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const MlpConfig& c) {
    j = nlohmann::json{{"hidden_units", c.hidden_units}, {"dropout_rate", c.dropout_rate},
                       {"learning_rate", c.learning_rate}, {"lr_decay", c.lr_decay},
                       {"epochs_train", c.epochs_train}, {"epochs_update", c.epochs_update},
                       {"batch_size", c.batch_size}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, MlpConfig& c) {
    if (j.contains("hidden_units")) j.at("hidden_units").get_to(c.hidden_units);
    if (j.contains("dropout_rate")) j.at("dropout_rate").get_to(c.dropout_rate);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
    if (j.contains("lr_decay")) j.at("lr_decay").get_to(c.lr_decay);
    if (j.contains("epochs_train")) j.at("epochs_train").get_to(c.epochs_train);
    if (j.contains("epochs_update")) j.at("epochs_update").get_to(c.epochs_update);
    if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
    if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

/// input -> hidden (ReLU) -> linear scalar output. Parameters live in one flat vector:
/// w1 (hidden x inputs, row-major), b1 (hidden), w2 (hidden), b2 (1).
class MlpNetwork {
public:
    MlpNetwork() = default;
    MlpNetwork(std::size_t inputs, std::size_t hidden)
        : inputs_(inputs), hidden_(hidden), theta_(hidden * inputs + 2 * hidden + 1, 0.0) {}

    std::size_t inputs() const { return inputs_; }
    std::size_t hidden() const { return hidden_; }
    std::size_t parameter_count() const { return theta_.size(); }

    std::span<double> parameters() { return theta_; }
    std::span<const double> parameters() const { return theta_; }

    double& w1(std::size_t h, std::size_t i) { return theta_[h * inputs_ + i]; }
    double& b1(std::size_t h) { return theta_[hidden_ * inputs_ + h]; }
    double& w2(std::size_t h) { return theta_[hidden_ * inputs_ + hidden_ + h]; }
    double& b2() { return theta_.back(); }

    /// He-normal hidden weights, scaled-normal output weights, zero biases.
    void initialize(Rng& rng) {
        std::fill(theta_.begin(), theta_.end(), 0.0);
        const double sd1 = std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(inputs_, 1)));
        const double sd2 = std::sqrt(1.0 / static_cast<double>(std::max<std::size_t>(hidden_, 1)));
        for (std::size_t k = 0; k < hidden_ * inputs_; ++k) theta_[k] = sd1 * rng.normal();
        for (std::size_t h = 0; h < hidden_; ++h) w2(h) = sd2 * rng.normal();
    }

    /// Deterministic forward pass (no dropout).
    double forward(std::span<const double> x) const {
        if (x.size() != inputs_) throw std::invalid_argument("feature dimension mismatch");
        const double* w1p = theta_.data();
        const double* b1p = w1p + hidden_ * inputs_;
        const double* w2p = b1p + hidden_;
        double out = theta_.back();
        for (std::size_t h = 0; h < hidden_; ++h) {
            double a = b1p[h];
            const double* row = w1p + h * inputs_;
            for (std::size_t i = 0; i < inputs_; ++i) a += row[i] * x[i];
            if (a > 0.0) out += w2p[h] * a;
        }
        return out;
    }

    /// Mean squared error over rows (row-major, inputs() columns).
    double loss(std::span<const double> rows, std::span<const double> targets) const {
        double sum = 0.0;
        for (std::size_t r = 0; r < targets.size(); ++r) {
            const double e = forward(rows.subspan(r * inputs_, inputs_)) - targets[r];
            sum += e * e;
        }
        return targets.empty() ? 0.0 : sum / static_cast<double>(targets.size());
    }

    /// Adds d/dtheta of scale * (f(x) - y)^2 to grad and returns the squared error. keep is an
    /// optional per-hidden-unit multiplier (inverted dropout mask: 0 or 1/(1-p)).
    double accumulate_gradient(std::span<const double> x, double y, std::span<double> grad, double scale = 1.0,
                               std::span<const double> keep = {}) const {
        thread_local std::vector<double> act;
        act.resize(hidden_);
        const double* w1p = theta_.data();
        const double* b1p = w1p + hidden_ * inputs_;
        const double* w2p = b1p + hidden_;
        double out = theta_.back();
        for (std::size_t h = 0; h < hidden_; ++h) {
            double a = b1p[h];
            const double* row = w1p + h * inputs_;
            for (std::size_t i = 0; i < inputs_; ++i) a += row[i] * x[i];
            a = a > 0.0 ? a : 0.0;
            if (!keep.empty()) a *= keep[h];
            act[h] = a;
            out += w2p[h] * a;
        }
        const double err = out - y;
        const double g = 2.0 * err * scale;
        double* gw1 = grad.data();
        double* gb1 = gw1 + hidden_ * inputs_;
        double* gw2 = gb1 + hidden_;
        grad.back() += g;
        for (std::size_t h = 0; h < hidden_; ++h) {
            gw2[h] += g * act[h];
            if (act[h] <= 0.0) continue;  // inactive or dropped unit
            const double gh = g * w2p[h] * (keep.empty() ? 1.0 : keep[h]);
            gb1[h] += gh;
            double* grow = gw1 + h * inputs_;
            for (std::size_t i = 0; i < inputs_; ++i) grow[i] += gh * x[i];
        }
        return err * err;
    }

    /// Gradient of the mean squared error over rows, without dropout.
    std::vector<double> gradient(std::span<const double> rows, std::span<const double> targets) const {
        std::vector<double> grad(theta_.size(), 0.0);
        const double scale = targets.empty() ? 0.0 : 1.0 / static_cast<double>(targets.size());
        for (std::size_t r = 0; r < targets.size(); ++r) {
            accumulate_gradient(rows.subspan(r * inputs_, inputs_), targets[r], grad, scale);
        }
        return grad;
    }

    bool operator==(const MlpNetwork&) const = default;

private:
    std::size_t inputs_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> theta_;
};

class InsufficientHistoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Single-hidden-layer regressor trained by seeded mini-batch gradient descent on squared error.
/// Feature and target scaling are fitted by train() and stay frozen through update().
class MlpRegressor {
public:
    MlpRegressor() = default;
    explicit MlpRegressor(MlpConfig config) : config_(config) {}

    const MlpConfig& config() const { return config_; }
    const MlpNetwork& network() const { return net_; }
    MlpNetwork& network() { return net_; }
    const Standardizer& feature_scaling() const { return features_; }
    const Standardizer& target_scaling() const { return target_; }
    bool trained() const { return net_.inputs() > 0; }

    /// Fresh model: discards all learned state. rows is row-major with `inputs` columns.
    void train(std::span<const double> rows, std::span<const double> targets, std::size_t inputs) {
        if (inputs == 0 || targets.empty() || rows.size() != targets.size() * inputs) {
            throw std::invalid_argument("training matrix shape mismatch or empty");
        }
        features_ = Standardizer::fit(rows, inputs);
        target_ = Standardizer::fit(targets, 1);
        rng_ = Rng(config_.seed);
        net_ = MlpNetwork(inputs, config_.hidden_units);
        net_.initialize(rng_);
        fit(rows, targets, config_.epochs_train);
    }

    /// Continues gradient descent from the current parameters with frozen scaling.
    void update(std::span<const double> rows, std::span<const double> targets) {
        if (!trained()) throw std::logic_error("update before train");
        if (targets.empty()) {
            log::warn("mlp update called with an empty batch; skipped");
            return;
        }
        if (rows.size() != targets.size() * net_.inputs()) throw std::invalid_argument("update matrix shape mismatch");
        fit(rows, targets, config_.epochs_update);
    }

    /// Raw (unscaled) features in; demand out, clamped at zero.
    double predict(std::span<const double> features) const {
        if (!trained()) throw std::logic_error("predict before train");
        if (features.size() != net_.inputs()) throw std::invalid_argument("feature dimension mismatch");
        thread_local std::vector<double> x;
        x.assign(features.begin(), features.end());
        features_.apply(x);
        return std::max(0.0, target_.invert(net_.forward(x)));
    }

    /// Mean squared error in demand units (unclamped) over raw rows.
    double loss(std::span<const double> rows, std::span<const double> targets) const {
        double sum = 0.0;
        std::vector<double> x(net_.inputs());
        for (std::size_t r = 0; r < targets.size(); ++r) {
            std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(r * net_.inputs()), net_.inputs(), x.begin());
            features_.apply(x);
            const double e = target_.invert(net_.forward(x)) - targets[r];
            sum += e * e;
        }
        return targets.empty() ? 0.0 : sum / static_cast<double>(targets.size());
    }

    /// Installs explicit parameters and scaling (fixtures, checkpoints).
    void set_state(MlpNetwork net, Standardizer features, Standardizer target) {
        if (features.size() != net.inputs() || target.size() != 1) throw std::invalid_argument("scaling shape mismatch");
        net_ = std::move(net);
        features_ = std::move(features);
        target_ = std::move(target);
        rng_ = Rng(config_.seed);
    }

private:
    void fit(std::span<const double> raw_rows, std::span<const double> raw_targets, int epochs) {
        const std::size_t d = net_.inputs();
        const std::size_t n = raw_targets.size();
        std::vector<double> rows(raw_rows.begin(), raw_rows.end());
        features_.apply_rows(rows);
        std::vector<double> y(raw_targets.begin(), raw_targets.end());
        target_.apply_rows(y);

        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<double> grad(net_.parameter_count());
        std::vector<double> keep(net_.hidden(), 1.0);
        const double p = config_.dropout_rate;
        const bool dropout = p > 0.0;
        const double keep_scale = dropout ? 1.0 / (1.0 - p) : 1.0;
        const std::size_t batch = std::max<std::size_t>(config_.batch_size, 1);

        double lr = config_.learning_rate;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            rng_.shuffle(order.begin(), order.end());
            for (std::size_t start = 0; start < n; start += batch) {
                const std::size_t stop = std::min(n, start + batch);
                std::fill(grad.begin(), grad.end(), 0.0);
                const double scale = 1.0 / static_cast<double>(stop - start);
                for (std::size_t k = start; k < stop; ++k) {
                    const std::size_t r = order[k];
                    if (dropout) {
                        for (auto& m : keep) m = rng_.uniform() < p ? 0.0 : keep_scale;
                        net_.accumulate_gradient(std::span<const double>(rows).subspan(r * d, d), y[r], grad, scale, keep);
                    } else {
                        net_.accumulate_gradient(std::span<const double>(rows).subspan(r * d, d), y[r], grad, scale);
                    }
                }
                auto theta = net_.parameters();
                for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
            }
            lr *= config_.lr_decay;
        }
    }

    MlpConfig config_{};
    MlpNetwork net_{};
    Standardizer features_{};
    Standardizer target_{};
    Rng rng_{0};
};

inline constexpr int kMlpStateVersion = 1;

/// Checkpoint document: header {format, version, config}, then flat row-major parameter arrays.
inline nlohmann::json mlp_state_to_json(const MlpRegressor& m) {
    const MlpNetwork& net = m.network();
    const auto theta = net.parameters();
    const std::size_t h = net.hidden(), in = net.inputs();
    nlohmann::json j;
    j["format"] = "driftcast-mlp";
    j["version"] = kMlpStateVersion;
    j["config"] = m.config();
    j["inputs"] = in;
    j["hidden"] = h;
    j["w1"] = std::vector<double>(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(h * in));
    j["b1"] = std::vector<double>(theta.begin() + static_cast<std::ptrdiff_t>(h * in),
                                  theta.begin() + static_cast<std::ptrdiff_t>(h * in + h));
    j["w2"] = std::vector<double>(theta.begin() + static_cast<std::ptrdiff_t>(h * in + h),
                                  theta.begin() + static_cast<std::ptrdiff_t>(h * in + 2 * h));
    j["b2"] = theta.empty() ? 0.0 : theta.back();
    j["feature_mean"] = m.feature_scaling().mean();
    j["feature_scale"] = m.feature_scaling().scale();
    j["target_mean"] = m.target_scaling().size() ? m.target_scaling().mean()[0] : 0.0;
    j["target_scale"] = m.target_scaling().size() ? m.target_scaling().scale()[0] : 1.0;
    return j;
}

inline MlpRegressor mlp_state_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "driftcast-mlp") throw std::runtime_error("not a driftcast-mlp checkpoint");
    if (j.at("version").get<int>() != kMlpStateVersion) throw std::runtime_error("unsupported checkpoint version");
    MlpRegressor m(j.at("config").get<MlpConfig>());
    const auto in = j.at("inputs").get<std::size_t>();
    const auto h = j.at("hidden").get<std::size_t>();
    MlpNetwork net(in, h);
    const auto w1 = j.at("w1").get<std::vector<double>>();
    const auto b1 = j.at("b1").get<std::vector<double>>();
    const auto w2 = j.at("w2").get<std::vector<double>>();
    if (w1.size() != h * in || b1.size() != h || w2.size() != h) throw std::runtime_error("checkpoint array sizes");
    auto theta = net.parameters();
    std::copy(w1.begin(), w1.end(), theta.begin());
    std::copy(b1.begin(), b1.end(), theta.begin() + static_cast<std::ptrdiff_t>(h * in));
    std::copy(w2.begin(), w2.end(), theta.begin() + static_cast<std::ptrdiff_t>(h * in + h));
    theta.back() = j.at("b2").get<double>();
    m.set_state(std::move(net),
                Standardizer(j.at("feature_mean").get<std::vector<double>>(), j.at("feature_scale").get<std::vector<double>>()),
                Standardizer({j.at("target_mean").get<double>()}, {j.at("target_scale").get<double>()}));
    return m;
}

}  // namespace driftcast
