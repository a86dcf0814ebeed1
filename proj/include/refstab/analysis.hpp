#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "refstab/model.hpp"
#include "refstab/stability.hpp"

namespace refstab {

/// Frequency counts over the fingerprints of a selection of observations.
/// Unresolvable observations are tracked apart; counting them as a key would
/// fabricate a configuration.
struct FingerprintHistogram {
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;       // sum of counts
    std::uint64_t null_count = 0;  // observations with no usable fingerprint

    void add(const std::optional<std::string>& fingerprint) {
        if (fingerprint && !fingerprint->empty()) {
            ++counts[*fingerprint];
            ++total;
        } else {
            ++null_count;
        }
    }

    FingerprintSet keys() const {
        FingerprintSet s;
        for (const auto& [k, _] : counts) s.insert(k);
        return s;
    }
};

inline FingerprintHistogram histogram(std::span<const ObservationRecord> records) {
    FingerprintHistogram h;
    for (const auto& r : records) {
        auto config = resolve_once(r);
        h.add(config ? config->fingerprint : std::nullopt);
    }
    return h;
}

/// Most frequent fingerprint and its share of the non-null total. Ties go to
/// the lexicographically smallest key.
inline std::pair<std::string, double> modal_share(const FingerprintHistogram& h) {
    if (h.total == 0) {
        throw std::domain_error("modal_share of an empty histogram");
    }
    const std::string* best_key = nullptr;
    std::uint64_t best_count = 0;
    for (const auto& [key, count] : h.counts) {  // map order: smallest key wins ties
        if (count > best_count) {
            best_count = count;
            best_key = &key;
        }
    }
    return {*best_key, static_cast<double>(best_count) / static_cast<double>(h.total)};
}

/// Pairwise overlap of two unique-fingerprint sets. Ratios are kept at full
/// precision; rounding happens only at rendering.
struct OverlapReport {
    std::size_t shared = 0;
    double jaccard = 0.0;    // |A∩B| / |A∪B|, 0 when both sets are empty
    double a_covered = 0.0;  // |A∩B| / |A|
    double b_covered = 0.0;  // |A∩B| / |B|
};

inline OverlapReport overlap(const FingerprintSet& a, const FingerprintSet& b) {
    OverlapReport r;
    for (const auto& x : a) {
        if (b.count(x)) ++r.shared;
    }
    std::size_t uni = a.size() + b.size() - r.shared;
    r.jaccard = uni == 0 ? 0.0 : static_cast<double>(r.shared) / static_cast<double>(uni);
    r.a_covered = a.empty() ? 0.0 : static_cast<double>(r.shared) / static_cast<double>(a.size());
    r.b_covered = b.empty() ? 0.0 : static_cast<double>(r.shared) / static_cast<double>(b.size());
    return r;
}

// Display rounding: two decimals for Jaccard, one for percentages.
inline std::string format_jaccard(double j) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", j);
    return buf;
}

inline std::string format_percent(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", ratio * 100.0);
    return buf;
}

/// Unique-count breakdown for one campaign of an identifier.
struct CampaignDiversity {
    std::string campaign_id;
    std::uint64_t n_obs = 0;
    std::size_t unique = 0;
};

/// One identifier's row of the diversity table.
struct DiversityRow {
    std::string name;
    std::uint64_t n_obs = 0;      // observations carrying a fingerprint
    std::uint64_t null_count = 0;
    std::size_t unique = 0;       // deduplicated over the whole selection
    std::string top_fingerprint;
    double top_share = 0.0;
    FingerprintSet witness;
    std::vector<CampaignDiversity> campaigns;  // per-campaign unique counts
};

struct OverlapRow {
    std::string a;
    std::string b;
    OverlapReport report;
};

struct DiversityReport {
    std::vector<DiversityRow> rows;     // identifier name ascending
    std::vector<OverlapRow> pairs;      // only pairs with shared > 0, (a,b) name-ordered
};

/// Computes the diversity table plus all pairwise overlaps with a non-empty
/// intersection. Unique counts are reported both over the whole selection and
/// per campaign, since a selection may span many measurement runs.
inline DiversityReport diversity_report(
    const std::map<std::string, std::vector<ObservationRecord>>& by_identifier) {
    DiversityReport report;
    for (const auto& [name, records] : by_identifier) {
        DiversityRow row;
        row.name = name;
        FingerprintHistogram h =
            histogram(std::span<const ObservationRecord>(records.data(), records.size()));
        row.n_obs = h.total;
        row.null_count = h.null_count;
        row.unique = h.counts.size();
        row.witness = h.keys();
        if (h.total > 0) {
            auto [top, share] = modal_share(h);
            row.top_fingerprint = top;
            row.top_share = share;
        }
        std::map<std::string, FingerprintHistogram> per_campaign;
        for (const auto& r : records) {
            auto config = resolve_once(r);
            per_campaign[r.campaign_id].add(config ? config->fingerprint : std::nullopt);
        }
        for (const auto& [cid, ch] : per_campaign) {
            row.campaigns.push_back({cid, ch.total, ch.counts.size()});
        }
        report.rows.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        for (std::size_t j = i + 1; j < report.rows.size(); ++j) {
            OverlapReport o = overlap(report.rows[i].witness, report.rows[j].witness);
            if (o.shared > 0) {
                report.pairs.push_back({report.rows[i].name, report.rows[j].name, o});
            }
        }
    }
    return report;
}

inline json overlap_to_json(const OverlapReport& o) {
    json j;
    j["shared"] = o.shared;
    j["jaccard"] = o.jaccard;
    j["a_covered"] = o.a_covered;
    j["b_covered"] = o.b_covered;
    j["jaccard_display"] = format_jaccard(o.jaccard);
    j["a_covered_pct_display"] = format_percent(o.a_covered);
    j["b_covered_pct_display"] = format_percent(o.b_covered);
    return j;
}

inline json diversity_report_to_json(const DiversityReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["model"] = row.name;
        r["n_obs"] = row.n_obs;
        r["null_count"] = row.null_count;
        r["unique"] = row.unique;
        r["top_fingerprint"] = row.top_fingerprint;
        r["top_share"] = row.top_share;
        r["top_share_pct_display"] = format_percent(row.top_share);
        json campaigns = json::array();
        for (const auto& c : row.campaigns) {
            json cj;
            cj["campaign_id"] = c.campaign_id;
            cj["n_obs"] = c.n_obs;
            cj["unique"] = c.unique;
            campaigns.push_back(cj);
        }
        r["campaigns"] = campaigns;
        rows.push_back(r);
    }
    json pairs = json::array();
    for (const auto& p : report.pairs) {
        json pj = overlap_to_json(p.report);
        pj["a"] = p.a;
        pj["b"] = p.b;
        pairs.push_back(pj);
    }
    json out;
    out["rows"] = rows;
    out["pairs"] = pairs;
    return out;
}

namespace detail {
inline std::string pad(const std::string& s, std::size_t w) {
    return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}
}  // namespace detail

inline std::string diversity_report_to_text(const DiversityReport& report) {
    using detail::pad;
    std::ostringstream out;
    std::size_t name_w = 5;
    for (const auto& row : report.rows) name_w = std::max(name_w, row.name.size());
    out << pad("model", name_w) << "  " << pad("n_obs", 8) << pad("unique", 8)
        << pad("top_share", 11) << pad("null", 6) << "\n";
    for (const auto& row : report.rows) {
        out << pad(row.name, name_w) << "  " << pad(std::to_string(row.n_obs), 8)
            << pad(std::to_string(row.unique), 8)
            << pad(row.n_obs ? format_percent(row.top_share) + "%" : "-", 11)
            << pad(std::to_string(row.null_count), 6) << "\n";
    }
    if (report.pairs.empty()) {
        out << "no overlapping fingerprint sets\n";
    } else {
        out << "overlaps (shared > 0):\n";
        for (const auto& p : report.pairs) {
            out << "  " << p.a << " ~ " << p.b << "  shared " << p.report.shared
                << "  jaccard " << format_jaccard(p.report.jaccard) << "  A covered "
                << format_percent(p.report.a_covered) << "%  B covered "
                << format_percent(p.report.b_covered) << "%\n";
        }
    }
    return out.str();
}

}  // namespace refstab
