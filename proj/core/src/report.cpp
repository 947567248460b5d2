#include "rpglab/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace rpglab {

namespace {

constexpr const char* kMetricsHeader =
    "iter,episodes,samples,mean_return,se_return,surrogate_return,lambda,grad_norm,wall_ms";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double_field(const std::string& field, const std::string& path, int lineno) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    require(ec == std::errc() && ptr == field.data() + field.size(),
            path + " line " + std::to_string(lineno) + ": bad number '" + field + "'");
    return value;
}

long parse_long_field(const std::string& field, const std::string& path, int lineno) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    require(ec == std::errc() && ptr == field.data() + field.size(),
            path + " line " + std::to_string(lineno) + ": bad integer '" + field + "'");
    return value;
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

// mean return at x, linearly interpolated; constant beyond either end
double curve_value_at(const MetricsCurve& curve, double x) {
    const auto& rows = curve.rows;
    if (x <= static_cast<double>(rows.front().samples)) return rows.front().mean_return;
    if (x >= static_cast<double>(rows.back().samples)) return rows.back().mean_return;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double x0 = static_cast<double>(rows[i - 1].samples);
        const double x1 = static_cast<double>(rows[i].samples);
        if (x <= x1) {
            if (x1 == x0) return rows[i].mean_return;
            const double t = (x - x0) / (x1 - x0);
            return rows[i - 1].mean_return + t * (rows[i].mean_return - rows[i - 1].mean_return);
        }
    }
    return rows.back().mean_return;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

// plot area inside the 800x500 canvas
constexpr double kLeft = 70.0, kRight = 780.0, kTop = 20.0, kBottom = 440.0;

} // namespace

MetricsCurve read_metrics_curve(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open metrics file '" + path + "'");
    MetricsCurve curve;
    curve.path = path;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == kMetricsHeader, path + ": header does not match the metrics schema");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        require(fields.size() == 9,
                path + " line " + std::to_string(lineno) + ": expected 9 columns, got " +
                    std::to_string(fields.size()));
        IterationRow row;
        row.iter = static_cast<int>(parse_long_field(fields[0], path, lineno));
        row.episodes = parse_long_field(fields[1], path, lineno);
        row.samples = parse_long_field(fields[2], path, lineno);
        row.mean_return = parse_double_field(fields[3], path, lineno);
        row.se_return = parse_double_field(fields[4], path, lineno);
        row.surrogate_return = parse_double_field(fields[5], path, lineno);
        row.lambda = parse_double_field(fields[6], path, lineno);
        row.grad_norm = parse_double_field(fields[7], path, lineno);
        row.wall_ms = parse_double_field(fields[8], path, lineno);
        curve.rows.push_back(row);
    }
    return curve;
}

std::string render_learning_curves_svg(const std::vector<PlotSeries>& series) {
    require(!series.empty(), "plot needs at least one series");
    for (const auto& s : series) {
        require(!s.curves.empty(), "series '" + s.label + "' has no curves");
        for (const auto& c : s.curves)
            require(!c.rows.empty(), "series '" + s.label + "': '" + c.path + "' has no rows");
    }

    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool first = true;
    for (const auto& s : series)
        for (const auto& c : s.curves)
            for (const auto& r : c.rows) {
                const double x = static_cast<double>(r.samples);
                if (first) {
                    xmin = xmax = x;
                    ymin = ymax = r.mean_return;
                    first = false;
                } else {
                    xmin = std::min(xmin, x);
                    xmax = std::max(xmax, x);
                    ymin = std::min(ymin, r.mean_return);
                    ymax = std::max(ymax, r.mean_return);
                }
            }
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    const double ypad = (ymax == ymin) ? 1.0 : 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    const auto py = [&](double y) {
        return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\" "
           "font-family=\"Helvetica,Arial,sans-serif\" font-size=\"13\">\n";
    svg += "<rect width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";

    svg += "<g stroke=\"#dddddd\">\n";
    for (int i = 1; i < 5; ++i) {
        const double gx = kLeft + i * (kRight - kLeft) / 5.0;
        const double gy = kTop + i * (kBottom - kTop) / 5.0;
        svg += "<line x1=\"" + format_px(gx) + "\" y1=\"" + format_px(kTop) + "\" x2=\"" +
               format_px(gx) + "\" y2=\"" + format_px(kBottom) + "\"/>\n";
        svg += "<line x1=\"" + format_px(kLeft) + "\" y1=\"" + format_px(gy) + "\" x2=\"" +
               format_px(kRight) + "\" y2=\"" + format_px(gy) + "\"/>\n";
    }
    svg += "</g>\n";
    svg += "<rect x=\"70\" y=\"20\" width=\"710\" height=\"420\" fill=\"none\" "
           "stroke=\"#444444\"/>\n";

    svg += "<g fill=\"#444444\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + i * (xmax - xmin) / 5.0;
        const double yv = ymin + i * (ymax - ymin) / 5.0;
        svg += "<text x=\"" + format_px(px(xv)) + "\" y=\"458\" text-anchor=\"middle\">" +
               format_tick(xv) + "</text>\n";
        svg += "<text x=\"64\" y=\"" + format_px(py(yv) + 4.0) + "\" text-anchor=\"end\">" +
               format_tick(yv) + "</text>\n";
    }
    svg += "<text x=\"425\" y=\"488\" text-anchor=\"middle\">environment samples</text>\n";
    svg += "<text transform=\"translate(16,230) rotate(-90)\" text-anchor=\"middle\">mean "
           "return</text>\n";
    svg += "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % kPaletteSize];

        std::vector<double> xs;
        for (const auto& c : s.curves)
            for (const auto& r : c.rows) xs.push_back(static_cast<double>(r.samples));
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

        std::vector<double> lo(xs.size()), hi(xs.size()), mid(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double sum = 0.0, mn = 0.0, mx = 0.0;
            for (std::size_t ci = 0; ci < s.curves.size(); ++ci) {
                const double v = curve_value_at(s.curves[ci], xs[i]);
                if (ci == 0) mn = mx = v;
                mn = std::min(mn, v);
                mx = std::max(mx, v);
                sum += v;
            }
            lo[i] = mn;
            hi[i] = mx;
            mid[i] = sum / static_cast<double>(s.curves.size());
        }

        if (s.curves.size() > 1) {
            std::string pts;
            for (std::size_t i = 0; i < xs.size(); ++i)
                pts += format_px(px(xs[i])) + "," + format_px(py(hi[i])) + " ";
            for (std::size_t i = xs.size(); i-- > 0;)
                pts += format_px(px(xs[i])) + "," + format_px(py(lo[i])) + " ";
            pts.pop_back();
            svg += "<polygon points=\"" + pts + "\" fill=\"" + color +
                   "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        }

        std::string pts;
        for (std::size_t i = 0; i < xs.size(); ++i)
            pts += format_px(px(xs[i])) + "," + format_px(py(mid[i])) + " ";
        pts.pop_back();
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
    }

    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = 40.0 + 18.0 * static_cast<double>(si);
        const char* color = kPalette[si % kPaletteSize];
        svg += "<line x1=\"84\" y1=\"" + format_px(ly) + "\" x2=\"114\" y2=\"" + format_px(ly) +
               "\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"120\" y=\"" + format_px(ly + 4.0) + "\" fill=\"#333333\">" +
               escape_xml(series[si].label) + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

namespace {

struct RunSummary {
    std::string env;
    std::string algo;
    bool solved = false;
    double samples_until_solve = 0.0;
    double final_mean = 0.0;
};

RunSummary read_summary(const std::string& dir) {
    const std::string path = (std::filesystem::path(dir) / "summary.json").string();
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open '" + path + "'");
    RunSummary s;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        s.env = j.at("config").at("env").get<std::string>();
        s.algo = j.at("config").at("algo").get<std::string>();
        s.solved = j.at("solved").get<bool>();
        if (s.solved) s.samples_until_solve = j.at("samples_until_solve").get<double>();
        s.final_mean = j.at("final_eval").at("mean").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(path + ": " + e.what());
    }
    return s;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

CompareTable compare_runs(const std::vector<std::string>& run_dirs) {
    require(!run_dirs.empty(), "compare needs at least one run directory");
    CompareTable table;
    std::vector<std::string> order;
    std::map<std::string, std::vector<RunSummary>> groups;
    for (const auto& dir : run_dirs) {
        RunSummary s = read_summary(dir);
        if (table.env.empty())
            table.env = s.env;
        else
            require(s.env == table.env, "compare mixes environments '" + table.env + "' and '" +
                                            s.env + "' (" + dir + ")");
        if (!groups.count(s.algo)) order.push_back(s.algo);
        groups[s.algo].push_back(std::move(s));
    }
    for (const auto& algo : order) {
        const auto& runs = groups[algo];
        CompareRow row;
        row.algo = algo;
        row.seeds = static_cast<int>(runs.size());
        std::vector<double> samples, finals;
        for (const auto& r : runs) {
            finals.push_back(r.final_mean);
            if (r.solved) samples.push_back(r.samples_until_solve);
        }
        row.solved = static_cast<int>(samples.size());
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.median_samples = samples.empty() ? nan : median(samples);
        row.mean_samples = nan;
        if (!samples.empty()) {
            double sum = 0.0;
            for (double v : samples) sum += v;
            row.mean_samples = sum / static_cast<double>(samples.size());
        }
        double sum = 0.0;
        for (double v : finals) sum += v;
        row.mean_final = sum / static_cast<double>(finals.size());
        if (finals.size() > 1) {
            double ss = 0.0;
            for (double v : finals) ss += (v - row.mean_final) * (v - row.mean_final);
            const double sd = std::sqrt(ss / static_cast<double>(finals.size() - 1));
            row.se_final = sd / std::sqrt(static_cast<double>(finals.size()));
        } else {
            row.se_final = nan;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string compare_table_csv(const CompareTable& table) {
    std::string out = "algo,seeds,solved,median_samples,mean_samples,mean_final,se_final\n";
    const auto cell = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
    for (const auto& r : table.rows) {
        out += r.algo;
        out += ',' + std::to_string(r.seeds);
        out += ',' + std::to_string(r.solved);
        out += ',' + cell(r.median_samples);
        out += ',' + cell(r.mean_samples);
        out += ',' + cell(r.mean_final);
        out += ',' + cell(r.se_final);
        out += '\n';
    }
    return out;
}

std::string compare_table_pretty(const CompareTable& table) {
    std::ostringstream out;
    out << "environment: " << table.env << "\n";
    const auto cell = [](double v) {
        return std::isnan(v) ? std::string("-") : format_tick(v);
    };
    std::size_t name_w = 4;
    for (const auto& r : table.rows) name_w = std::max(name_w, r.algo.size());
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << "algo" << std::right
        << std::setw(6) << "seeds" << std::setw(8) << "solved" << std::setw(16)
        << "median_samples" << std::setw(14) << "mean_samples" << std::setw(12) << "mean_final"
        << std::setw(10) << "se_final" << "\n";
    for (const auto& r : table.rows) {
        out << std::left << std::setw(static_cast<int>(name_w) + 2) << r.algo << std::right
            << std::setw(6) << r.seeds << std::setw(8) << r.solved << std::setw(16)
            << cell(r.median_samples) << std::setw(14) << cell(r.mean_samples) << std::setw(12)
            << cell(r.mean_final) << std::setw(10) << cell(r.se_final) << "\n";
    }
    return out.str();
}

} // namespace rpglab
