#include "glee/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "glee/error.hpp"

namespace glee {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

}  // namespace

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    auto out = open_out(path);
    out << "variant,seed,accuracy,macro_f1,head_f1,tail_f1\n";
    for (const auto& r : rows) {
        out << r.variant << ',' << r.seed << ',' << format_real(r.accuracy) << ','
            << format_real(r.macro_f1) << ',' << format_real(r.head_f1) << ','
            << format_real(r.tail_f1) << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "variant,seed,accuracy,macro_f1,head_f1,tail_f1") {
        throw FormatError(path + ": unexpected results header");
    }
    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 6) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 6 fields");
        }
        ResultRow r;
        r.variant = f[0];
        try {
            r.seed = std::stoull(f[1]);
            r.accuracy = std::stod(f[2]);
            r.macro_f1 = std::stod(f[3]);
            r.head_f1 = std::stod(f[4]);
            r.tail_f1 = std::stod(f[5]);
        } catch (const std::exception&) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": bad numeric field");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct Acc {
    std::vector<double> acc, macro, head, tail;
};

void mean_std_var(const std::vector<double>& v, double& mean, double& sd, double& var) {
    const double n = static_cast<double>(v.size());
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;  // population
    sd = std::sqrt(var);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, Acc> by_variant;
    for (const auto& r : rows) {
        if (by_variant.find(r.variant) == by_variant.end()) order.push_back(r.variant);
        Acc& a = by_variant[r.variant];
        a.acc.push_back(r.accuracy);
        a.macro.push_back(r.macro_f1);
        a.head.push_back(r.head_f1);
        a.tail.push_back(r.tail_f1);
    }
    std::vector<SummaryRow> out;
    for (const auto& v : order) {
        const Acc& a = by_variant[v];
        SummaryRow s;
        s.variant = v;
        s.n_seeds = a.acc.size();
        mean_std_var(a.acc, s.accuracy_mean, s.accuracy_std, s.accuracy_var);
        mean_std_var(a.macro, s.macro_f1_mean, s.macro_f1_std, s.macro_f1_var);
        mean_std_var(a.head, s.head_f1_mean, s.head_f1_std, s.head_f1_var);
        mean_std_var(a.tail, s.tail_f1_mean, s.tail_f1_std, s.tail_f1_var);
        out.push_back(std::move(s));
    }
    return out;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    auto out = open_out(path);
    out << "variant,n_seeds,accuracy_mean,accuracy_std,accuracy_var,"
           "macro_f1_mean,macro_f1_std,macro_f1_var,"
           "head_f1_mean,head_f1_std,head_f1_var,"
           "tail_f1_mean,tail_f1_std,tail_f1_var,flags\n";
    for (const auto& s : rows) {
        out << s.variant << ',' << s.n_seeds << ',' << format_real(s.accuracy_mean) << ','
            << format_real(s.accuracy_std) << ',' << format_real(s.accuracy_var) << ','
            << format_real(s.macro_f1_mean) << ',' << format_real(s.macro_f1_std) << ','
            << format_real(s.macro_f1_var) << ',' << format_real(s.head_f1_mean) << ','
            << format_real(s.head_f1_std) << ',' << format_real(s.head_f1_var) << ','
            << format_real(s.tail_f1_mean) << ',' << format_real(s.tail_f1_std) << ','
            << format_real(s.tail_f1_var) << ',' << s.flags << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}

void write_norm_csv(const std::string& path,
                    const std::vector<std::pair<std::string, NormProfile>>& profiles) {
    auto out = open_out(path);
    out << "variant,class,rank,count,norm\n";
    for (const auto& [variant, profile] : profiles) {
        for (std::size_t rank = 0; rank < profile.entries.size(); ++rank) {
            const auto& e = profile.entries[rank];
            out << variant << ',' << e.class_id << ',' << rank << ',' << e.count << ','
                << format_real(e.norm) << '\n';
        }
    }
    if (!out) throw IoError("write failed on " + path);
}

void write_slopes_csv(const std::string& path, const std::vector<SlopeRow>& rows) {
    auto out = open_out(path);
    out << "variant,seed,pearson_r,spearman_rho,flat\n";
    for (const auto& r : rows) {
        out << r.variant << ',' << r.seed << ',' << format_real(r.slope.pearson_r) << ','
            << format_real(r.slope.spearman_rho) << ',' << (r.slope.flat ? 1 : 0) << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}

void write_checks_csv(const std::string& path, const std::vector<CheckRow>& rows) {
    auto out = open_out(path);
    out << "check,detail,status\n";
    for (const auto& r : rows) {
        out << r.name << ',' << r.detail << ',' << (r.ok ? "ok" : "flagged") << '\n';
    }
    if (!out) throw IoError("write failed on " + path);
}

void write_norm_svg(const std::string& path,
                    const std::vector<std::pair<std::string, NormProfile>>& profiles) {
    if (profiles.empty()) throw EmptyInputError("write_norm_svg: no profiles");
    static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                     "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double width = 720, height = 440;
    const double x0 = 70, x1 = width - 30, y0 = height - 50, y1 = 30;

    std::size_t max_rank = 1;
    double max_norm = 0.0;
    for (const auto& [_, p] : profiles) {
        max_rank = std::max(max_rank, p.entries.size());
        for (const auto& e : p.entries) max_norm = std::max(max_norm, e.norm);
    }
    if (max_norm <= 0.0) max_norm = 1.0;

    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    auto x_of = [&](std::size_t rank) {
        return x0 + (x1 - x0) * static_cast<double>(rank) /
                        static_cast<double>(std::max<std::size_t>(1, max_rank - 1));
    };
    auto y_of = [&](double norm) { return y0 - (y0 - y1) * (norm / max_norm); };

    auto out = open_out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    out << "  <line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1)
        << "\" y2=\"" << fmt(y0) << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0)
        << "\" y2=\"" << fmt(y1) << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(height - 12)
        << "\" text-anchor=\"middle\" font-size=\"13\">class rank (0 = most frequent)</text>\n";
    out << "  <text x=\"18\" y=\"" << fmt((y0 + y1) / 2)
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
        << fmt((y0 + y1) / 2) << ")\">predictor row L2 norm</text>\n";
    // y-axis ticks at 0, max/2, max
    for (double frac : {0.0, 0.5, 1.0}) {
        const double v = max_norm * frac;
        out << "  <text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(y_of(v) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(v) << "</text>\n";
    }

    std::size_t color = 0;
    double legend_y = y1 + 8;
    for (const auto& [variant, p] : profiles) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "  <polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t rank = 0; rank < p.entries.size(); ++rank) {
            if (rank) out << ' ';
            out << fmt(x_of(rank)) << ',' << fmt(y_of(p.entries[rank].norm));
        }
        out << "\"/>\n";
        out << "  <text x=\"" << fmt(x1 - 150) << "\" y=\"" << fmt(legend_y)
            << "\" font-size=\"12\" fill=\"" << stroke << "\">" << xml_escape(variant)
            << "</text>\n";
        legend_y += 16;
        ++color;
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed on " + path);
}

void write_feature_csv(const std::string& path, const std::string& variant,
                       const std::vector<FeatureDistribution>& dists) {
    auto out = open_out(path);
    out << "variant,class,feature,value\n";
    for (const auto& d : dists) {
        for (std::size_t j = 0; j < d.k; ++j) {
            for (double v : d.values[j]) {
                out << variant << ',' << d.class_id << ',' << j << ',' << format_real(v)
                    << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed on " + path);
}

}  // namespace glee
