#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/stats.hpp"
#include "driftcast/stream.hpp"
#include "driftcast/time.hpp"

namespace driftcast {

enum class DriftStatus { stable = 0, warning = 1, drift = 2 };

inline std::string_view to_string(DriftStatus s) {
    switch (s) {
        case DriftStatus::stable: return "stable";
        case DriftStatus::warning: return "warning";
        case DriftStatus::drift: return "drift";
    }
    return "stable";
}

inline DriftStatus most_severe(DriftStatus a, DriftStatus b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

struct DetectorVerdict {
    DriftStatus status = DriftStatus::stable;
    TimeIndex at;
};

/// A prediction is correct when |predicted - actual| <= threshold * max(actual, eps_zero).
/// The boundary is inclusive; eps_zero keeps zero-demand hours well defined.
inline bool binarize(double actual, double predicted, double threshold = 0.10, double eps_zero = 1.0) {
    return std::fabs(predicted - actual) <= threshold * std::max(actual, eps_zero);
}

inline bool binarize(const PredictionRecord& r, double threshold = 0.10, double eps_zero = 1.0) {
    return binarize(r.actual, r.predicted, threshold, eps_zero);
}

// ---------------------------------------------------------------------------------------------
// ADWIN
// ---------------------------------------------------------------------------------------------

/// Adaptive windowing over values in [0, 1], using an exponential histogram of buckets.
/// Level i buckets summarize 2^i elements; at most max_buckets per level. Cuts are tested at
/// bucket boundaries; on a cut everything older than the newest cutting boundary is dropped and
/// the test repeats on what is left.
class Adwin {
public:
    struct Bucket {
        double sum = 0.0;
        std::uint64_t count = 0;
    };

    explicit Adwin(double delta = 0.002, std::size_t max_buckets = 5) : delta_(delta), max_buckets_(max_buckets) {
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("adwin delta must lie in (0, 1)");
        if (max_buckets < 2) throw std::invalid_argument("adwin needs at least 2 buckets per level");
    }

    /// Inserts x; returns drift when at least one cut happened.
    DriftStatus update(double x) {
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("adwin input must lie in [0, 1]");
        insert(x);
        dropped_.clear();
        bool cut = false;
        for (std::uint64_t older = find_cut(); older > 0; older = find_cut()) {
            while (older > 0) older -= drop_oldest();
            cut = true;
        }
        return cut ? DriftStatus::drift : DriftStatus::stable;
    }

    std::uint64_t width() const { return width_; }
    double total() const { return total_; }
    double mean() const { return width_ ? total_ / static_cast<double>(width_) : 0.0; }
    double delta() const { return delta_; }
    std::size_t max_buckets() const { return max_buckets_; }

    /// levels()[i] holds buckets of 2^i elements, oldest first.
    const std::vector<std::deque<Bucket>>& levels() const { return levels_; }

    /// Sizes of buckets dropped during the latest update.
    const std::vector<std::uint64_t>& dropped() const { return dropped_; }

    /// epsilon_cut = sqrt(1/(2m) * ln(4/delta')), 1/m = 1/n0 + 1/n1, delta' = delta / n.
    static double cut_threshold(double n0, double n1, double n, double delta) {
        const double inv_m = 1.0 / n0 + 1.0 / n1;
        const double delta_prime = delta / n;
        return std::sqrt(0.5 * inv_m * std::log(4.0 / delta_prime));
    }

    void reset() {
        levels_.clear();
        width_ = 0;
        total_ = 0.0;
        dropped_.clear();
    }

private:
    void insert(double x) {
        if (levels_.empty()) levels_.emplace_back();
        levels_[0].push_back({x, 1});
        ++width_;
        total_ += x;
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            if (levels_[i].size() <= max_buckets_) break;
            Bucket a = levels_[i].front();
            levels_[i].pop_front();
            Bucket b = levels_[i].front();
            levels_[i].pop_front();
            if (i + 1 == levels_.size()) levels_.emplace_back();
            levels_[i + 1].push_back({a.sum + b.sum, a.count + b.count});
        }
    }

    /// Size of the older sub-window at the newest boundary that cuts; 0 when none does.
    std::uint64_t find_cut() const {
        if (width_ < 2) return 0;
        const double n = static_cast<double>(width_);
        std::uint64_t n0 = 0, older = 0;
        double s0 = 0.0;
        for (std::size_t lvl = levels_.size(); lvl-- > 0;) {
            for (const Bucket& b : levels_[lvl]) {
                n0 += b.count;
                s0 += b.sum;
                if (n0 >= width_) return older;
                const double w0 = static_cast<double>(n0), w1 = n - w0;
                const double diff = std::fabs(s0 / w0 - (total_ - s0) / w1);
                if (diff >= cut_threshold(w0, w1, n, delta_)) older = n0;
            }
        }
        return older;
    }

    std::uint64_t drop_oldest() {
        while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
        if (levels_.empty()) return 0;
        const Bucket b = levels_.back().front();
        levels_.back().pop_front();
        width_ -= b.count;
        total_ -= b.sum;
        dropped_.push_back(b.count);
        while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
        return b.count;
    }

    double delta_;
    std::size_t max_buckets_;
    std::vector<std::deque<Bucket>> levels_;
    std::uint64_t width_ = 0;
    double total_ = 0.0;
    std::vector<std::uint64_t> dropped_;
};

// ---------------------------------------------------------------------------------------------
// STEPD
// ---------------------------------------------------------------------------------------------

/// Test of equal proportions between the accuracy of the most recent w predictions and the
/// accuracy of everything before them (since the last reset).
class Stepd {
public:
    explicit Stepd(std::size_t window = 30, double alpha_drift = 0.003, double alpha_warning = 0.05)
        : window_(window), alpha_drift_(alpha_drift), alpha_warning_(alpha_warning) {
        if (window == 0) throw std::invalid_argument("stepd window must be positive");
    }

    DriftStatus update(bool correct) {
        recent_.push_back(correct);
        recent_correct_ += correct ? 1 : 0;
        ++seen_;
        seen_correct_ += correct ? 1 : 0;
        if (recent_.size() > window_) {
            recent_correct_ -= recent_.front() ? 1 : 0;
            recent_.pop_front();
        }
        last_p_ = 1.0;
        const std::uint64_t n_o = seen_ - recent_.size();
        if (n_o < window_) return DriftStatus::stable;
        last_p_ = p_value(seen_correct_ - recent_correct_, n_o, recent_correct_, recent_.size());
        if (last_p_ < alpha_drift_) {
            reset();
            return DriftStatus::drift;
        }
        return last_p_ < alpha_warning_ ? DriftStatus::warning : DriftStatus::stable;
    }

    /// Continuity-corrected two-proportion statistic; p = min(1, 2 * P(Z > T)).
    static double statistic(std::uint64_t r_o, std::uint64_t n_o, std::uint64_t r_r, std::uint64_t n_r) {
        const double no = static_cast<double>(n_o), nr = static_cast<double>(n_r);
        const double p_hat = static_cast<double>(r_o + r_r) / (no + nr);
        const double denom = std::sqrt(p_hat * (1.0 - p_hat) * (1.0 / no + 1.0 / nr));
        const double num = std::fabs(static_cast<double>(r_o) / no - static_cast<double>(r_r) / nr) - 0.5 * (1.0 / no + 1.0 / nr);
        if (denom == 0.0) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        return num / denom;
    }

    static double p_value(std::uint64_t r_o, std::uint64_t n_o, std::uint64_t r_r, std::uint64_t n_r) {
        const double t = statistic(r_o, n_o, r_r, n_r);
        if (t <= 0.0) return 1.0;
        return std::min(1.0, 2.0 * stats::normal_upper_tail(t));
    }

    void reset() {
        recent_.clear();
        recent_correct_ = 0;
        seen_ = 0;
        seen_correct_ = 0;
    }

    std::size_t window() const { return window_; }
    std::size_t recent_size() const { return recent_.size(); }
    std::uint64_t seen() const { return seen_; }
    double last_p_value() const { return last_p_; }

private:
    std::size_t window_;
    double alpha_drift_;
    double alpha_warning_;
    std::deque<bool> recent_;
    std::uint64_t recent_correct_ = 0;
    std::uint64_t seen_ = 0;
    std::uint64_t seen_correct_ = 0;
    double last_p_ = 1.0;
};

// ---------------------------------------------------------------------------------------------
// Hellinger distance / HDDDM
// ---------------------------------------------------------------------------------------------

struct Histogram {
    std::vector<double> edges;   // bins + 1 ascending edges
    std::vector<double> counts;  // one per bin

    static Histogram with_edges(std::vector<double> edges) {
        Histogram h;
        h.counts.assign(edges.size() > 0 ? edges.size() - 1 : 0, 0.0);
        h.edges = std::move(edges);
        return h;
    }

    /// Equal-width bins over [lo, hi]; a degenerate range is widened by 0.5 on each side.
    static Histogram equal_width(double lo, double hi, std::size_t bins) {
        if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
        std::vector<double> e(bins + 1);
        for (std::size_t k = 0; k <= bins; ++k) e[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
        return with_edges(std::move(e));
    }

    std::size_t bins() const { return counts.size(); }

    double total() const {
        double t = 0.0;
        for (double c : counts) t += c;
        return t;
    }

    /// Values outside the edges land in the first/last bin.
    void add(double x, double weight = 1.0) {
        const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, x);
        counts[static_cast<std::size_t>(it - (edges.begin() + 1))] += weight;
    }

    void merge(const Histogram& other) {
        if (other.edges != edges) throw std::invalid_argument("histogram edges differ");
        for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
    }
};

/// sqrt(sum_k (sqrt(p_k/N_p) - sqrt(q_k/N_q))^2), in [0, sqrt(2)].
inline double hellinger_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("hellinger: bin counts differ");
    double np = 0.0, nq = 0.0;
    for (double v : p) np += v;
    for (double v : q) nq += v;
    if (!(np > 0.0) || !(nq > 0.0)) throw std::invalid_argument("hellinger: empty histogram");
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double d = std::sqrt(p[k] / np) - std::sqrt(q[k] / nq);
        sum += d * d;
    }
    return std::sqrt(sum);
}

inline double hellinger_distance(const Histogram& p, const Histogram& q) {
    if (p.edges != q.edges) throw std::invalid_argument("hellinger: histograms use different bin edges");
    return hellinger_distance(std::span<const double>(p.counts), std::span<const double>(q.counts));
}

/// Batch detector on the distribution of raw (seasonally differenced) inputs. Each batch is
/// compared to a baseline histogram; drift fires when the change in distance exceeds
/// mean + gamma * sd of earlier changes since the last reset.
class Hdddm {
public:
    explicit Hdddm(std::size_t batch_size = 168, double gamma = 1.0)
        : batch_size_(batch_size), gamma_(gamma),
          bins_(static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(batch_size))))) {
        if (batch_size < 4) throw std::invalid_argument("hdddm batch_size must be >= 4");
    }

    /// Buffers x; evaluates when a batch is complete.
    DriftStatus update(double x) {
        pending_.push_back(x);
        if (pending_.size() < batch_size_) return DriftStatus::stable;
        std::vector<double> batch;
        batch.swap(pending_);
        return step_batch(batch);
    }

    DriftStatus step_batch(std::span<const double> batch) {
        if (batch.size() != batch_size_) throw std::invalid_argument("hdddm batch has the wrong size");
        ++batches_since_reset_;
        if (!baseline_) {
            start_baseline(batch);
            return DriftStatus::stable;
        }
        Histogram current = Histogram::with_edges(baseline_->edges);
        for (double x : batch) current.add(x);
        const double d = hellinger_distance(*baseline_, current);
        last_distance_ = d;
        DriftStatus status = DriftStatus::stable;
        if (previous_distance_) {
            const double eps = std::fabs(d - *previous_distance_);
            if (!eps_history_.empty() && eps > threshold()) {
                status = DriftStatus::drift;
            } else {
                eps_history_.push_back(eps);
            }
        }
        if (status == DriftStatus::drift) {
            reset();
            ++batches_since_reset_;
            start_baseline(batch);
        } else {
            baseline_->merge(current);
            previous_distance_ = d;
        }
        return status;
    }

    /// mean(|eps|) + gamma * sd(|eps|) over the history; +inf while the history is empty.
    double threshold() const {
        if (eps_history_.empty() || std::isinf(gamma_)) return std::numeric_limits<double>::infinity();
        double mean = 0.0;
        for (double e : eps_history_) mean += e;
        mean /= static_cast<double>(eps_history_.size());
        double var = 0.0;
        for (double e : eps_history_) var += (e - mean) * (e - mean);
        var /= static_cast<double>(eps_history_.size());
        return mean + gamma_ * std::sqrt(var);
    }

    void reset() {
        baseline_.reset();
        previous_distance_.reset();
        eps_history_.clear();
        pending_.clear();
        batches_since_reset_ = 0;
    }

    std::size_t batch_size() const { return batch_size_; }
    std::size_t bins() const { return bins_; }
    const std::optional<Histogram>& baseline() const { return baseline_; }
    const std::vector<double>& epsilon_history() const { return eps_history_; }
    std::size_t pending() const { return pending_.size(); }
    double last_distance() const { return last_distance_; }

private:
    void start_baseline(std::span<const double> batch) {
        const auto [lo, hi] = std::minmax_element(batch.begin(), batch.end());
        Histogram h = Histogram::equal_width(*lo, *hi, bins_);
        for (double x : batch) h.add(x);
        baseline_ = std::move(h);
        previous_distance_ = 0.0;  // the baseline batch is at distance 0 from itself
    }

    std::size_t batch_size_;
    double gamma_;
    std::size_t bins_;
    std::optional<Histogram> baseline_;
    std::optional<double> previous_distance_;
    std::vector<double> eps_history_;
    std::vector<double> pending_;
    std::size_t batches_since_reset_ = 0;
    double last_distance_ = 0.0;
};

// ---------------------------------------------------------------------------------------------
// Mann-Kendall
// ---------------------------------------------------------------------------------------------

struct MkResult {
    std::int64_t s = 0;
    double var_s = 0.0;
    double z = 0.0;
};

namespace detail {

/// Counts pairs i < j with v[i] > v[j] (strict) while merge-sorting v.
inline std::uint64_t count_strict_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                                             std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_strict_inversions(v, scratch, lo, mid) + count_strict_inversions(v, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[i] <= v[j]) {
            scratch[k++] = v[i++];
        } else {
            inv += mid - i;
            scratch[k++] = v[j++];
        }
    }
    while (i < mid) scratch[k++] = v[i++];
    while (j < hi) scratch[k++] = v[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace detail

/// S = sum_{i<j} sgn(x_j - x_i), tie-corrected variance, continuity-corrected Z.
/// Runs in O(n log n): S = pairs - tied pairs - 2 * strict inversions.
inline MkResult mk_statistic(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) throw std::invalid_argument("mann-kendall needs at least 4 observations");
    std::vector<double> v(x.begin(), x.end());
    std::vector<double> scratch(n);
    const std::uint64_t inversions = detail::count_strict_inversions(v, scratch, 0, n);
    // v is now sorted; tie groups are runs of equal values.
    std::int64_t tied_pairs = 0;
    std::int64_t tie_term = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && v[j] == v[i]) ++j;
        const auto t = static_cast<std::int64_t>(j - i);
        tied_pairs += t * (t - 1) / 2;
        tie_term += t * (t - 1) * (2 * t + 5);
        i = j;
    }
    const auto nn = static_cast<std::int64_t>(n);
    MkResult r;
    r.s = nn * (nn - 1) / 2 - tied_pairs - 2 * static_cast<std::int64_t>(inversions);
    r.var_s = static_cast<double>(nn * (nn - 1) * (2 * nn + 5) - tie_term) / 18.0;
    if (r.var_s <= 0.0 || r.s == 0) {
        r.z = 0.0;
    } else if (r.s > 0) {
        r.z = static_cast<double>(r.s - 1) / std::sqrt(r.var_s);
    } else {
        r.z = static_cast<double>(r.s + 1) / std::sqrt(r.var_s);
    }
    return r;
}

/// Streaming Mann-Kendall: evaluates on the whole buffer every block_size inputs; drift when
/// |Z| exceeds the two-sided critical value, after which the buffer is cleared.
class MannKendallStream {
public:
    explicit MannKendallStream(std::size_t block_size = 168, double alpha = 0.05)
        : block_size_(block_size), alpha_(alpha), critical_(stats::normal_quantile(1.0 - alpha / 2.0)) {
        if (block_size < 4) throw std::invalid_argument("mann-kendall block size must be >= 4");
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("mann-kendall alpha must lie in (0, 1)");
    }

    DriftStatus update(double x) {
        buffer_.push_back(x);
        if (buffer_.size() % block_size_ != 0) return DriftStatus::stable;
        last_ = mk_statistic(buffer_);
        ++evaluations_;
        if (std::fabs(last_.z) > critical_) {
            buffer_.clear();
            return DriftStatus::drift;
        }
        return DriftStatus::stable;
    }

    void reset() { buffer_.clear(); }

    std::size_t buffer_size() const { return buffer_.size(); }
    std::size_t evaluations() const { return evaluations_; }
    double critical_value() const { return critical_; }
    const MkResult& last_result() const { return last_; }

private:
    std::size_t block_size_;
    double alpha_;
    double critical_;
    std::vector<double> buffer_;
    MkResult last_{};
    std::size_t evaluations_ = 0;
};

// ---------------------------------------------------------------------------------------------
// Configuration and a uniform runtime interface
// ---------------------------------------------------------------------------------------------

enum class DetectorKind { adwin, stepd, hdddm, mann_kendall };

NLOHMANN_JSON_SERIALIZE_ENUM(DetectorKind, {{DetectorKind::adwin, "adwin"},
                                            {DetectorKind::stepd, "stepd"},
                                            {DetectorKind::hdddm, "hdddm"},
                                            {DetectorKind::mann_kendall, "mk"}})

inline std::string_view to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::adwin: return "adwin";
        case DetectorKind::stepd: return "stepd";
        case DetectorKind::hdddm: return "hdddm";
        case DetectorKind::mann_kendall: return "mk";
    }
    return "adwin";
}

inline std::optional<DetectorKind> parse_detector_kind(std::string_view s) {
    if (s == "adwin") return DetectorKind::adwin;
    if (s == "stepd") return DetectorKind::stepd;
    if (s == "hdddm") return DetectorKind::hdddm;
    if (s == "mk" || s == "mann_kendall") return DetectorKind::mann_kendall;
    return std::nullopt;
}

/// Error-stream detectors see one binarized outcome per prediction; raw-input detectors see the
/// seasonally differenced demand.
inline bool consumes_prediction_errors(DetectorKind k) { return k == DetectorKind::adwin || k == DetectorKind::stepd; }

struct DetectorSettings {
    double adwin_delta = 0.002;
    std::size_t adwin_max_buckets = 5;
    std::size_t stepd_window = 30;
    double stepd_alpha_drift = 0.003;
    double stepd_alpha_warning = 0.05;
    std::size_t hdddm_batch_size = 168;
    double hdddm_gamma = 1.0;
    std::size_t mk_block_size = 168;
    double mk_alpha = 0.05;
    double correct_threshold = 0.10;
    double eps_zero = 1.0;

    bool operator==(const DetectorSettings&) const = default;
};

inline void to_json(nlohmann::json& j, const DetectorSettings& s) {
    j = nlohmann::json{{"adwin", {{"delta", s.adwin_delta}, {"max_buckets", s.adwin_max_buckets}}},
                       {"stepd", {{"window", s.stepd_window}, {"alpha_drift", s.stepd_alpha_drift}, {"alpha_warning", s.stepd_alpha_warning}}},
                       {"hdddm", {{"batch_size", s.hdddm_batch_size}, {"gamma", s.hdddm_gamma}}},
                       {"mk", {{"block_size", s.mk_block_size}, {"alpha", s.mk_alpha}}},
                       {"binarize", {{"threshold", s.correct_threshold}, {"eps_zero", s.eps_zero}}}};
}

/// Uniform face over the four detectors. Error-stream detectors take x = 1 for an incorrect
/// prediction and 0 for a correct one.
class Detector {
public:
    virtual ~Detector() = default;
    virtual DriftStatus update(double x) = 0;
    virtual DetectorKind kind() const = 0;
    virtual std::unique_ptr<Detector> clone() const = 0;
};

template <class Impl, DetectorKind Kind>
class DetectorAdapter final : public Detector {
public:
    explicit DetectorAdapter(Impl impl) : impl_(std::move(impl)) {}
    DriftStatus update(double x) override {
        if constexpr (Kind == DetectorKind::stepd) {
            return impl_.update(x < 0.5);
        } else {
            return impl_.update(x);
        }
    }
    DetectorKind kind() const override { return Kind; }
    std::unique_ptr<Detector> clone() const override { return std::make_unique<DetectorAdapter>(*this); }
    const Impl& impl() const { return impl_; }

private:
    Impl impl_;
};

inline std::unique_ptr<Detector> make_detector(DetectorKind kind, const DetectorSettings& s = {}) {
    switch (kind) {
        case DetectorKind::adwin:
            return std::make_unique<DetectorAdapter<Adwin, DetectorKind::adwin>>(Adwin(s.adwin_delta, s.adwin_max_buckets));
        case DetectorKind::stepd:
            return std::make_unique<DetectorAdapter<Stepd, DetectorKind::stepd>>(
                Stepd(s.stepd_window, s.stepd_alpha_drift, s.stepd_alpha_warning));
        case DetectorKind::hdddm:
            return std::make_unique<DetectorAdapter<Hdddm, DetectorKind::hdddm>>(Hdddm(s.hdddm_batch_size, s.hdddm_gamma));
        case DetectorKind::mann_kendall:
            return std::make_unique<DetectorAdapter<MannKendallStream, DetectorKind::mann_kendall>>(
                MannKendallStream(s.mk_block_size, s.mk_alpha));
    }
    throw std::invalid_argument("unknown detector kind");
}

}  // namespace driftcast
