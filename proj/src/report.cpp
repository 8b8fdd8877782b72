// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ieadapt/errors.hpp"
#include "ieadapt/harness.hpp"

namespace ieadapt {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::nan("");
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ValidationError("bad number '" + s + "' in report row");
    }
    if (pos != s.size()) throw ValidationError("bad number '" + s + "' in report row");
    return v;
}

struct MetricColumn {
    const char* name;
    const char* title;
    double MetricRecord::*field;
};

constexpr MetricColumn kMetricColumns[] = {
    {"ssim", "SSIM vs baseline", &MetricRecord::ssim},
    {"mse", "MSE vs baseline", &MetricRecord::mse},
    {"motion_magnitude", "Motion magnitude (proxy)", &MetricRecord::motion_magnitude},
    {"motion_smoothness", "Motion smoothness (proxy)", &MetricRecord::motion_smoothness},
    {"subject_consistency", "Subject consistency (proxy)", &MetricRecord::subject_consistency},
    {"sharpness", "Sharpness (proxy)", &MetricRecord::sharpness},
};

}  // namespace

std::string report_header() {
    return "run_id,prompt_id,seed,layer_set,mode_set,matrix,alpha,ssim,mse,motion_magnitude,motion_smoothness,"
           "subject_consistency,sharpness,entropy_pct_mean,status";
}

std::string report_row(const RunRecord& r) {
    std::ostringstream os;
    os << r.run_id << ',' << r.prompt_id << ',' << r.seed << ',' << r.layer_set << ',' << r.mode_set << ','
       << r.matrix << ',' << fmt(r.alpha);
    for (const auto& c : kMetricColumns) os << ',' << fmt(r.metrics.*c.field);
    os << ',' << fmt(r.entropy_pct_mean) << ',' << r.status;
    return os.str();
}

RunRecord parse_report_row(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 15) throw ValidationError("report row has " + std::to_string(f.size()) + " fields, want 15");
    RunRecord r;
    r.run_id = f[0];
    r.prompt_id = f[1];
    try {
        r.seed = std::stoull(f[2]);
    } catch (const std::exception&) {
        throw ValidationError("bad seed '" + f[2] + "' in report row");
    }
    r.layer_set = f[3];
    r.mode_set = f[4];
    r.matrix = f[5];
    r.alpha = parse_double(f[6]);
    std::size_t i = 7;
    for (const auto& c : kMetricColumns) r.metrics.*c.field = parse_double(f[i++]);
    r.entropy_pct_mean = parse_double(f[13]);
    r.status = f[14];
    return r;
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<std::string>& series, const std::vector<std::vector<double>>& values) {
    static const char* const kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};
    const double bar_w = 14.0, gap = 12.0, left = 60.0, top = 40.0, plot_h = 220.0;
    const double group_w = bar_w * static_cast<double>(std::max<std::size_t>(1, series.size())) + gap;
    const double width = left + group_w * static_cast<double>(groups.size()) + 20.0 + 120.0;
    const double height = top + plot_h + 60.0;

    double lo = 0.0, hi = 0.0;
    for (const auto& row : values)
        for (double v : row)
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    if (hi == lo) hi = lo + 1.0;
    auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
       << "\">\n"
       << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "  <text x=\"" << fmt(left) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
       << xml_escape(title) << "</text>\n"
       << "  <line x1=\"" << fmt(left) << "\" y1=\"" << fmt(y_of(0.0)) << "\" x2=\"" << fmt(width - 130.0)
       << "\" y2=\"" << fmt(y_of(0.0)) << "\" stroke=\"black\"/>\n"
       << "  <text x=\"4\" y=\"" << fmt(top + 4.0) << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt(hi)
       << "</text>\n"
       << "  <text x=\"4\" y=\"" << fmt(top + plot_h) << "\" font-family=\"sans-serif\" font-size=\"10\">"
       << fmt(lo) << "</text>\n";
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double x0 = left + group_w * static_cast<double>(g);
        for (std::size_t s = 0; s < series.size() && g < values.size() && s < values[g].size(); ++s) {
            const double v = values[g][s];
            if (!std::isfinite(v)) continue;
            const double y = std::min(y_of(v), y_of(0.0));
            const double h = std::abs(y_of(v) - y_of(0.0));
            os << "  <rect x=\"" << fmt(x0 + bar_w * static_cast<double>(s)) << "\" y=\"" << fmt(y)
               << "\" width=\"" << fmt(bar_w - 1.0) << "\" height=\"" << fmt(h) << "\" fill=\""
               << kColors[s % 6] << "\"><title>" << xml_escape(groups[g] + " " + series[s] + " = " + fmt(v))
               << "</title></rect>\n";
        }
        os << "  <text x=\"" << fmt(x0) << "\" y=\"" << fmt(top + plot_h + 16.0)
           << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(groups[g]) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = top + 14.0 * static_cast<double>(s);
        os << "  <rect x=\"" << fmt(width - 120.0) << "\" y=\"" << fmt(y) << "\" width=\"10\" height=\"10\" fill=\""
           << kColors[s % 6] << "\"/>\n"
           << "  <text x=\"" << fmt(width - 106.0) << "\" y=\"" << fmt(y + 9.0)
           << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(series[s]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_report(const std::vector<RunRecord>& records, const fs::path& out_dir) {
    if (records.empty()) throw DomainError("emit_report: no records");
    fs::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "report.csv");
        if (!os) throw IoError("cannot write " + (out_dir / "report.csv").string());
        os << report_header() << '\n';
        for (const auto& r : records) os << report_row(r) << '\n';
    }

    // Groups are layer sets, series are matrix labels (blend alpha appended),
    // both in first-appearance order; values are means over prompts and seeds.
    std::vector<std::string> groups, series;
    auto index_of = [](std::vector<std::string>& v, const std::string& s) {
        auto it = std::find(v.begin(), v.end(), s);
        if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
        v.push_back(s);
        return v.size() - 1;
    };
    std::vector<std::pair<std::size_t, std::size_t>> cell;
    for (const auto& r : records) {
        const std::string g = r.layer_set.empty() ? std::string("-") : "L" + r.layer_set;
        std::string s = r.matrix;
        if (r.matrix == "blend" || r.matrix == "rho") s += " " + fmt(r.alpha);
        cell.emplace_back(index_of(groups, g), index_of(series, s));
    }
    for (const auto& c : kMetricColumns) {
        std::vector<std::vector<double>> sum(groups.size(), std::vector<double>(series.size(), 0.0));
        std::vector<std::vector<std::size_t>> cnt(groups.size(), std::vector<std::size_t>(series.size(), 0));
        for (std::size_t i = 0; i < records.size(); ++i) {
            const double v = records[i].metrics.*c.field;
            if (records[i].status != "ok" || !std::isfinite(v)) continue;
            sum[cell[i].first][cell[i].second] += v;
            ++cnt[cell[i].first][cell[i].second];
        }
        for (std::size_t g = 0; g < groups.size(); ++g)
            for (std::size_t s = 0; s < series.size(); ++s)
                sum[g][s] = cnt[g][s] ? sum[g][s] / static_cast<double>(cnt[g][s]) : std::nan("");
        std::ofstream(out_dir / (std::string(c.name) + ".svg")) << svg_bar_chart(c.title, groups, series, sum);
    }
}

}  // namespace ieadapt
