#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "driftcast/stream.hpp"
#include "driftcast/time.hpp"

namespace driftcast {

struct TripRecord {
    TimeIndex pickup_time;
    ZoneId zone = 0;
    double metered_distance = 0.0;
};

enum class RejectReason : std::uint8_t {
    malformed_row,
    negative_distance,
    unknown_zone,
    out_of_range,
};

inline constexpr std::size_t kRejectReasonCount = 4;

inline std::string_view reason_code(RejectReason r) {
    switch (r) {
        case RejectReason::malformed_row: return "malformed_row";
        case RejectReason::negative_distance: return "negative_distance";
        case RejectReason::unknown_zone: return "unknown_zone";
        case RejectReason::out_of_range: return "out_of_range";
    }
    return "unknown";
}

struct IngestStats {
    std::uint64_t accepted = 0;
    std::array<std::uint64_t, kRejectReasonCount> rejected{};

    std::uint64_t rejected_total() const {
        std::uint64_t n = 0;
        for (auto c : rejected) n += c;
        return n;
    }
    void count(RejectReason r) { ++rejected[static_cast<std::size_t>(r)]; }

    IngestStats& operator+=(const IngestStats& o) {
        accepted += o.accepted;
        for (std::size_t i = 0; i < kRejectReasonCount; ++i) rejected[i] += o.rejected[i];
        return *this;
    }
};

/// Acceptance rules for trip rows.
struct TripFilter {
    std::optional<std::set<ZoneId>> known_zones;  // empty optional: any non-negative zone id
    std::optional<TimeIndex> earliest;           // inclusive
    std::optional<TimeIndex> latest;             // exclusive

    std::optional<RejectReason> check(const TripRecord& r) const {
        if (r.metered_distance < 0.0) return RejectReason::negative_distance;
        if (r.zone < 0 || (known_zones && !known_zones->contains(r.zone))) return RejectReason::unknown_zone;
        if (r.pickup_time.hour < 0 || (earliest && r.pickup_time < *earliest) || (latest && r.pickup_time >= *latest)) {
            return RejectReason::out_of_range;
        }
        return std::nullopt;
    }
};

/// Maps logical columns to header names. TLC files renamed these columns several times.
struct CsvSchema {
    std::string pickup_column = "pickup_datetime";
    std::string zone_column = "zone_id";
    std::string distance_column = "trip_distance";
};

/// Counts accepted trips per (hour, zone). Shards can be aggregated separately and merged;
/// merging is plain addition, so the result does not depend on shard order.
class TripAggregator {
public:
    explicit TripAggregator(TripFilter filter = {}) : filter_(std::move(filter)) {}

    std::optional<RejectReason> add(const TripRecord& r) {
        if (auto reason = filter_.check(r)) {
            stats_.count(*reason);
            return reason;
        }
        ++counts_[{r.pickup_time.hour, r.zone}];
        ++stats_.accepted;
        return std::nullopt;
    }

    void reject_malformed() { stats_.count(RejectReason::malformed_row); }

    void merge(const TripAggregator& other) {
        for (const auto& [key, n] : other.counts_) counts_[key] += n;
        stats_ += other.stats_;
    }

    const IngestStats& stats() const { return stats_; }

    /// Dense zero-filled grid from the first to the last accepted hour (or the filter's range when
    /// set). With top_k, only the k zones with the largest total demand are kept (ties: lower id).
    DemandStream finish(std::optional<std::size_t> top_k = std::nullopt, const Epoch& epoch = {}) const {
        if (stats_.accepted == 0) throw std::runtime_error("no accepted trip records");
        std::map<ZoneId, std::int64_t> totals;
        if (filter_.known_zones) {
            for (ZoneId z : *filter_.known_zones) totals[z] = 0;
        }
        std::int64_t lo = counts_.begin()->first.first;
        std::int64_t hi = lo;
        for (const auto& [key, n] : counts_) {
            totals[key.second] += n;
            lo = std::min(lo, key.first);
            hi = std::max(hi, key.first);
        }
        if (filter_.earliest) lo = filter_.earliest->hour;
        if (filter_.latest) hi = filter_.latest->hour - 1;

        std::vector<ZoneId> zones;
        if (top_k && *top_k < totals.size()) {
            std::vector<std::pair<ZoneId, std::int64_t>> ranked(totals.begin(), totals.end());
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            ranked.resize(*top_k);
            for (const auto& [z, n] : ranked) zones.push_back(z);
            std::sort(zones.begin(), zones.end());
        } else {
            for (const auto& [z, n] : totals) zones.push_back(z);
        }

        DemandStream out(epoch, TimeIndex{lo}, hi - lo + 1, zones);
        for (const auto& [key, n] : counts_) {
            if (!std::binary_search(zones.begin(), zones.end(), key.second)) continue;
            out.set(TimeIndex{key.first}, out.zone_position(key.second), n);
        }
        return out;
    }

private:
    TripFilter filter_;
    std::map<std::pair<std::int64_t, ZoneId>, std::int64_t> counts_;
    IngestStats stats_;
};

/// Hourly per-zone demand from trip records; rejected rows are counted in the aggregator stats.
inline DemandStream aggregate_trips(std::span<const TripRecord> records, std::optional<std::size_t> top_k = std::nullopt,
                                    const TripFilter& filter = {}, const Epoch& epoch = {},
                                    IngestStats* stats = nullptr) {
    TripAggregator agg(filter);
    for (const auto& r : records) agg.add(r);
    if (stats) *stats = agg.stats();
    return agg.finish(top_k, epoch);
}

namespace detail {

/// Splits one CSV line. Double-quoted fields may contain commas; "" is an escaped quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

struct RejectedRow {
    std::size_t line = 0;
    RejectReason reason = RejectReason::malformed_row;
};

/// Feeds every data row of a trip CSV into the aggregator. Malformed rows are counted and
/// skipped; the callback (optional) sees each rejection. Throws only when the header lacks a
/// mapped column.
template <class OnReject = void (*)(const RejectedRow&)>
void read_trip_csv(std::istream& in, const CsvSchema& schema, TripAggregator& agg, const Epoch& epoch = {},
                   OnReject on_reject = [](const RejectedRow&) {}) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trip file has no header");
    const auto header = detail::split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (detail::trim(header[i]) == name) return i;
        }
        throw std::runtime_error("trip file header lacks column '" + name + "'");
    };
    const std::size_t c_time = column(schema.pickup_column);
    const std::size_t c_zone = column(schema.zone_column);
    const std::size_t c_dist = column(schema.distance_column);
    const std::size_t needed = std::max({c_time, c_zone, c_dist}) + 1;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        std::optional<TripRecord> rec;
        if (fields.size() >= needed) {
            const auto t = epoch.parse(fields[c_time]);
            try {
                std::size_t used = 0;
                const std::string zs = detail::trim(fields[c_zone]);
                const int zone = std::stoi(zs, &used);
                const bool zone_ok = used == zs.size();
                const std::string ds = detail::trim(fields[c_dist]);
                const double dist = std::stod(ds, &used);
                if (t && zone_ok && used == ds.size()) rec = TripRecord{*t, zone, dist};
            } catch (const std::exception&) {
            }
        }
        if (!rec) {
            agg.reject_malformed();
            on_reject(RejectedRow{line_no, RejectReason::malformed_row});
            continue;
        }
        if (const auto reason = agg.add(*rec)) on_reject(RejectedRow{line_no, *reason});
    }
}

}  // namespace driftcast
