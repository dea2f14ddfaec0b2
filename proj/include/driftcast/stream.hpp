#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftcast/time.hpp"

namespace driftcast {

using ZoneId = int;

struct HourlyObservation {
    TimeIndex time;
    ZoneId zone = 0;
    std::int64_t demand = 0;

    bool operator==(const HourlyObservation&) const = default;
};

struct PredictionRecord {
    TimeIndex time;
    ZoneId zone = 0;
    double actual = 0.0;
    double predicted = 0.0;
    bool correct = false;
};

/// Reading outside the permitted time range. Raised by StreamView so that a lookahead bug
/// surfaces as an error instead of silently leaking future demand.
class StreamAccessError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class StreamView;

/// Dense hourly demand grid: one value per (hour, zone) over [begin, end).
class DemandStream {
public:
    DemandStream() = default;

    DemandStream(Epoch epoch, TimeIndex begin, std::int64_t hours, std::vector<ZoneId> zones)
        : epoch_(epoch), begin_(begin), hours_(hours), zones_(std::move(zones)),
          demand_(static_cast<std::size_t>(hours) * zones_.size(), 0) {
        if (hours < 0) throw std::invalid_argument("negative stream length");
        if (!std::is_sorted(zones_.begin(), zones_.end()) ||
            std::adjacent_find(zones_.begin(), zones_.end()) != zones_.end()) {
            throw std::invalid_argument("zones must be sorted and unique");
        }
    }

    /// Builds a dense grid. Every (hour, zone) cell between the first and last hour must be present exactly once.
    static DemandStream from_observations(std::span<const HourlyObservation> obs, const Epoch& epoch = {}) {
        if (obs.empty()) return DemandStream(epoch, {}, 0, {});
        std::vector<ZoneId> zones;
        TimeIndex lo = obs.front().time;
        TimeIndex hi = obs.front().time;
        for (const auto& o : obs) {
            zones.push_back(o.zone);
            lo = std::min(lo, o.time);
            hi = std::max(hi, o.time);
        }
        std::sort(zones.begin(), zones.end());
        zones.erase(std::unique(zones.begin(), zones.end()), zones.end());
        DemandStream s(epoch, lo, hi - lo + 1, zones);
        if (obs.size() != s.demand_.size()) {
            throw std::invalid_argument("observations do not form a dense (hour, zone) grid");
        }
        std::vector<char> seen(s.demand_.size(), 0);
        for (const auto& o : obs) {
            if (o.demand < 0) throw std::invalid_argument("negative demand");
            const std::size_t idx = s.index(o.time, s.zone_position(o.zone));
            if (seen[idx]) throw std::invalid_argument("duplicate (time, zone) observation");
            seen[idx] = 1;
            s.demand_[idx] = o.demand;
        }
        return s;
    }

    const Epoch& epoch() const { return epoch_; }
    TimeIndex begin_time() const { return begin_; }
    TimeIndex end_time() const { return begin_ + hours_; }
    std::int64_t hours() const { return hours_; }
    std::size_t zone_count() const { return zones_.size(); }
    const std::vector<ZoneId>& zones() const { return zones_; }
    bool empty() const { return demand_.empty(); }

    std::size_t zone_position(ZoneId zone) const {
        const auto it = std::lower_bound(zones_.begin(), zones_.end(), zone);
        if (it == zones_.end() || *it != zone) throw std::invalid_argument("unknown zone " + std::to_string(zone));
        return static_cast<std::size_t>(it - zones_.begin());
    }

    std::int64_t at(TimeIndex t, std::size_t zone_pos) const {
        if (t < begin_ || t >= end_time() || zone_pos >= zones_.size()) {
            throw StreamAccessError("stream read outside [begin, end)");
        }
        return demand_[index(t, zone_pos)];
    }

    void set(TimeIndex t, std::size_t zone_pos, std::int64_t demand) {
        if (demand < 0) throw std::invalid_argument("negative demand");
        demand_.at(index(t, zone_pos)) = demand;
    }

    /// Demand summed over all zones at hour t.
    std::int64_t total_at(TimeIndex t) const {
        std::int64_t sum = 0;
        for (std::size_t z = 0; z < zones_.size(); ++z) sum += at(t, z);
        return sum;
    }

    /// Per-zone series over the whole stream.
    std::vector<std::int64_t> series(std::size_t zone_pos) const {
        std::vector<std::int64_t> out(static_cast<std::size_t>(hours_));
        for (std::int64_t h = 0; h < hours_; ++h) out[static_cast<std::size_t>(h)] = at(begin_ + h, zone_pos);
        return out;
    }

    /// Observations in time-major, zone-minor order.
    std::vector<HourlyObservation> observations() const {
        std::vector<HourlyObservation> out;
        out.reserve(demand_.size());
        for (std::int64_t h = 0; h < hours_; ++h) {
            for (std::size_t z = 0; z < zones_.size(); ++z) {
                out.push_back({begin_ + h, zones_[z], demand_[index(begin_ + h, z)]});
            }
        }
        return out;
    }

    /// Copy restricted to zones, in the given order (sorted on construction).
    DemandStream select_zones(std::vector<ZoneId> keep) const {
        std::sort(keep.begin(), keep.end());
        DemandStream out(epoch_, begin_, hours_, keep);
        for (std::size_t k = 0; k < keep.size(); ++k) {
            const std::size_t src = zone_position(keep[k]);
            for (std::int64_t h = 0; h < hours_; ++h) out.demand_[out.index(begin_ + h, k)] = demand_[index(begin_ + h, src)];
        }
        return out;
    }

    StreamView view() const;
    StreamView view(TimeIndex from, TimeIndex to) const;

    bool operator==(const DemandStream&) const = default;

private:
    std::size_t index(TimeIndex t, std::size_t zone_pos) const {
        return static_cast<std::size_t>(t - begin_) * zones_.size() + zone_pos;
    }

    Epoch epoch_{};
    TimeIndex begin_{};
    std::int64_t hours_ = 0;
    std::vector<ZoneId> zones_;
    std::vector<std::int64_t> demand_;
};

/// Non-owning read window [begin, end) over a DemandStream. Reads outside it throw.
class StreamView {
public:
    StreamView() = default;
    StreamView(const DemandStream& s, TimeIndex begin, TimeIndex end)
        : stream_(&s), begin_(std::max(begin, s.begin_time())), end_(std::min(end, s.end_time())) {
        if (end_ < begin_) end_ = begin_;
    }

    const DemandStream& stream() const { return *stream_; }
    const Epoch& epoch() const { return stream_->epoch(); }
    TimeIndex begin_time() const { return begin_; }
    TimeIndex end_time() const { return end_; }
    std::int64_t hours() const { return end_ - begin_; }
    bool empty() const { return end_ <= begin_ || stream_->zone_count() == 0; }
    std::size_t zone_count() const { return stream_->zone_count(); }
    const std::vector<ZoneId>& zones() const { return stream_->zones(); }
    bool contains(TimeIndex t) const { return t >= begin_ && t < end_; }

    std::int64_t at(TimeIndex t, std::size_t zone_pos) const {
        if (!contains(t)) throw StreamAccessError("view read outside [begin, end)");
        return stream_->at(t, zone_pos);
    }

    std::int64_t total_at(TimeIndex t) const {
        if (!contains(t)) throw StreamAccessError("view read outside [begin, end)");
        return stream_->total_at(t);
    }

    /// Narrower view; never widens.
    StreamView sub(TimeIndex from, TimeIndex to) const {
        StreamView v(*stream_, std::max(from, begin_), std::min(to, end_));
        return v;
    }

    /// Calendar window [end - duration, end) intersected with this view.
    StreamView slice(const SlidingWindow& w) const { return sub(w.start(epoch()), w.end); }

private:
    const DemandStream* stream_ = nullptr;
    TimeIndex begin_{};
    TimeIndex end_{};
};

inline StreamView DemandStream::view() const { return StreamView(*this, begin_, end_time()); }
inline StreamView DemandStream::view(TimeIndex from, TimeIndex to) const { return StreamView(*this, from, to); }

/// Observations with time in [w.end - w.duration, w.end). Input must be sorted by time; order is preserved.
inline std::vector<HourlyObservation> slice_window(std::span<const HourlyObservation> stream, const SlidingWindow& w,
                                                   const Epoch& epoch = {}) {
    const TimeIndex start = w.start(epoch);
    const auto lo = std::lower_bound(stream.begin(), stream.end(), start,
                                     [](const HourlyObservation& o, TimeIndex t) { return o.time < t; });
    const auto hi = std::lower_bound(lo, stream.end(), w.end,
                                     [](const HourlyObservation& o, TimeIndex t) { return o.time < t; });
    return {lo, hi};
}

// Canonical interchange format: header "time_hour,zone,demand", one row per (hour, zone).

inline void write_stream_csv(std::ostream& out, const DemandStream& s) {
    out << "time_hour,zone,demand\n";
    for (std::int64_t h = 0; h < s.hours(); ++h) {
        const TimeIndex t = s.begin_time() + h;
        const std::string stamp = s.epoch().format(t);
        for (std::size_t z = 0; z < s.zone_count(); ++z) {
            out << stamp << ',' << s.zones()[z] << ',' << s.at(t, z) << '\n';
        }
    }
}

inline DemandStream read_stream_csv(std::istream& in, const Epoch& epoch = {}) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty stream file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "time_hour,zone,demand") throw std::runtime_error("unexpected stream header: " + line);
    std::vector<HourlyObservation> obs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw std::runtime_error("malformed stream row at line " + std::to_string(line_no));
        const auto t = epoch.parse(std::string_view(line).substr(0, c1));
        if (!t) throw std::runtime_error("bad time_hour at line " + std::to_string(line_no));
        try {
            std::size_t used = 0;
            const std::string zone_text = line.substr(c1 + 1, c2 - c1 - 1);
            const int zone = std::stoi(zone_text, &used);
            if (used != zone_text.size()) throw std::invalid_argument("zone");
            const std::string demand_text = line.substr(c2 + 1);
            const long long demand = std::stoll(demand_text, &used);
            if (used != demand_text.size() || demand < 0) throw std::invalid_argument("demand");
            obs.push_back({*t, zone, demand});
        } catch (const std::exception&) {
            throw std::runtime_error("bad zone/demand at line " + std::to_string(line_no));
        }
    }
    std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
        return a.time != b.time ? a.time < b.time : a.zone < b.zone;
    });
    return DemandStream::from_observations(obs, epoch);
}

}  // namespace driftcast
