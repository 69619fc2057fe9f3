#include "eas/stats_io.hpp"

#include "eas/csv.hpp"
#include "eas/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace eas::stats {

namespace {

std::string join_header(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + fields[i];
    return out;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& why) {
    throw Error(ErrorCode::BadRequest, "line " + std::to_string(line) + ": " + why);
}

double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        bad_row(line, "'" + s + "' is not a number");
    return v;
}

int parse_int(const std::string& s, std::size_t line) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) bad_row(line, "'" + s + "' is not an integer");
    return v;
}

CriterionData& criterion_slot(std::vector<CriterionData>& data, const std::string& name) {
    for (auto& c : data)
        if (c.criterion == name) return c;
    data.push_back({name, {}, std::nullopt, {}});
    return data.back();
}

std::vector<CriterionData> read_summaries(csv::Reader& reader) {
    std::vector<CriterionData> data;
    while (auto rec = reader.next()) {
        auto& f = rec->fields;
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 5) bad_row(rec->line, "expected 5 fields");
        GroupSummary g{f[1], parse_int(f[2], rec->line), parse_number(f[3], rec->line),
                       parse_number(f[4], rec->line)};
        auto& c = criterion_slot(data, f[0]);
        if (f[1] == "Total")
            c.total = std::move(g);
        else
            c.groups.push_back(std::move(g));
    }
    return data;
}

std::vector<CriterionData> read_ratings(csv::Reader& reader) {
    struct Accumulator {
        double sum = 0.0;
        int count = 0;
    };
    // criterion -> group -> respondent -> running mean, all in first-seen order
    std::vector<std::string> criteria;
    std::map<std::string, std::vector<std::string>> group_order;
    std::map<std::string, std::string> respondent_group;
    std::map<std::tuple<std::string, std::string>, std::vector<std::string>> respondent_order;
    std::map<std::tuple<std::string, std::string, std::string>, Accumulator> acc;

    while (auto rec = reader.next()) {
        auto& f = rec->fields;
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != 4) bad_row(rec->line, "expected 4 fields");
        const auto& respondent = f[0];
        const auto& group = f[1];
        const auto& criterion = f[2];
        const int score = parse_int(f[3], rec->line);
        if (score < 1 || score > 5) bad_row(rec->line, "score must be 1..5");
        auto [it, fresh] = respondent_group.emplace(respondent, group);
        if (!fresh && it->second != group)
            bad_row(rec->line, "respondent " + respondent + " appears in two groups");

        if (std::find(criteria.begin(), criteria.end(), criterion) == criteria.end())
            criteria.push_back(criterion);
        auto& groups = group_order[criterion];
        if (std::find(groups.begin(), groups.end(), group) == groups.end()) groups.push_back(group);
        auto& a = acc[{criterion, group, respondent}];
        if (a.count == 0) respondent_order[{criterion, group}].push_back(respondent);
        a.sum += score;
        ++a.count;
    }

    std::vector<CriterionData> data;
    for (const auto& criterion : criteria) {
        CriterionData c{criterion, {}, std::nullopt, {}};
        for (const auto& group : group_order[criterion]) {
            std::vector<double> values;
            for (const auto& r : respondent_order[{criterion, group}]) {
                const auto& a = acc[{criterion, group, r}];
                values.push_back(a.sum / a.count);
            }
            c.groups.push_back(summarize(group, values));
            c.raw.push_back(std::move(values));
        }
        data.push_back(std::move(c));
    }
    return data;
}

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.5f", v);
    return buf;
}

std::vector<double> flatten(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    return all;
}

AnovaRow anova_for(const CriterionData& c) {
    return c.raw_mode() ? one_way_anova(c.raw) : one_way_anova_from_summary(c.groups);
}

}  // namespace

std::vector<CriterionData> read_stats_csv(std::istream& in) {
    csv::Reader reader(in);
    auto head = reader.next();
    if (!head) throw Error(ErrorCode::MalformedHeader, "empty statistics input");
    const auto header = join_header(head->fields);
    if (header == kSummaryCsvHeader) return read_summaries(reader);
    if (header == kRatingsCsvHeader) return read_ratings(reader);
    throw Error(ErrorCode::MalformedHeader, "expected header '" + std::string(kSummaryCsvHeader) +
                                                "' or '" + std::string(kRatingsCsvHeader) + "'");
}

std::string descriptives_csv(const std::vector<CriterionData>& data) {
    std::string out(kDescriptivesHeader);
    out.push_back('\n');
    auto emit = [&](const std::string& criterion, const std::string& group, const DescriptiveRow& r) {
        out += csv::format_row({criterion, group, std::to_string(r.n), num(r.mean), num(r.sd),
                                num(r.se), num(r.ci_low), num(r.ci_high),
                                r.min ? num(*r.min) : "", r.max ? num(*r.max) : ""});
    };
    for (const auto& c : data) {
        if (c.raw_mode()) {
            for (std::size_t i = 0; i < c.groups.size(); ++i)
                emit(c.criterion, c.groups[i].group_label, describe(c.raw[i]));
            emit(c.criterion, "Total", describe(flatten(c.raw)));
        } else {
            for (const auto& g : c.groups)
                emit(c.criterion, g.group_label, describe_from_summary(g.n, g.mean, g.sd));
            const auto total = c.total ? *c.total : combine(c.groups);
            emit(c.criterion, "Total", describe_from_summary(total.n, total.mean, total.sd));
        }
    }
    return out;
}

std::string anova_csv(const std::vector<CriterionData>& data) {
    std::string out(kAnovaHeader);
    out.push_back('\n');
    for (const auto& c : data) {
        const auto row = anova_for(c);
        out += csv::format_row({c.criterion, "Between Groups", num(row.ss_between),
                                std::to_string(row.df_between), num(row.ms_between), num(row.f),
                                num(row.p)});
        out += csv::format_row({c.criterion, "Within Groups", num(row.ss_within),
                                std::to_string(row.df_within), num(row.ms_within), "", ""});
        out += csv::format_row({c.criterion, "Total", num(row.ss_total),
                                std::to_string(row.df_total), "", "", ""});
    }
    return out;
}

std::string tukey_csv(const std::vector<CriterionData>& data) {
    std::string out(kTukeyHeader);
    out.push_back('\n');
    for (const auto& c : data) {
        const auto row = anova_for(c);
        for (const auto& pair : tukey_hsd(c.groups, row.ms_within, row.df_within))
            out += csv::format_row({c.criterion, pair.group_a, pair.group_b, num(pair.diff),
                                    num(pair.se), num(pair.q), num(pair.p)});
    }
    return out;
}

}  // namespace eas::stats
