#include "surveycast/reports.hpp"

#include "surveycast/csv.hpp"

#include <algorithm>
#include <cmath>

namespace surveycast {

namespace {

std::string opt_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

} // namespace

void write_error_report_csv(std::ostream& out, const ErrorReport& report) {
    out << "state,mae,nmae,n\n";
    for (const auto& [state, se] : report.per_state) {
        out << state << ',' << format_double(se.mae) << ',' << opt_cell(se.nmae) << ','
            << se.n << '\n';
    }
    out << "entire," << format_double(report.overall_mae) << ','
        << opt_cell(report.overall_nmae) << ',' << report.n << '\n';
}

void write_compare_csv(std::ostream& out, const ErrorReport& local,
                       const ErrorReport& global) {
    out << "state,mae_local,mae_global,nmae_local,nmae_global\n";
    for (const auto& [state, se] : local.per_state) {
        const auto it = global.per_state.find(state);
        if (it == global.per_state.end()) continue;
        out << state << ',' << format_double(se.mae) << ',' << format_double(it->second.mae)
            << ',' << opt_cell(se.nmae) << ',' << opt_cell(it->second.nmae) << '\n';
    }
    out << "entire," << format_double(local.overall_mae) << ','
        << format_double(global.overall_mae) << ',' << opt_cell(local.overall_nmae) << ','
        << opt_cell(global.overall_nmae) << '\n';
}

CompareWins count_lower_mae(const ErrorReport& local, const ErrorReport& global) {
    CompareWins w;
    for (const auto& [state, se] : local.per_state) {
        const auto it = global.per_state.find(state);
        if (it == global.per_state.end()) continue;
        ++w.total;
        if (se.mae < it->second.mae) ++w.wins;
    }
    return w;
}

void write_per_seed_csv(std::ostream& out, const std::vector<SeedResult>& per_seed) {
    out << "seed,mae,nmae\n";
    for (const auto& sr : per_seed) {
        out << sr.seed << ',' << format_double(sr.mae) << ',' << opt_cell(sr.nmae) << '\n';
    }
}

void write_ci_csv(std::ostream& out, const std::vector<SeedResult>& per_seed,
                  double level) {
    out << "metric,mean,ci_low,ci_high,n_runs\n";
    std::vector<double> maes, nmaes;
    for (const auto& sr : per_seed) {
        maes.push_back(sr.mae);
        if (sr.nmae) nmaes.push_back(*sr.nmae);
    }
    auto emit = [&](const std::string& name, const std::vector<double>& values) {
        if (values.empty()) return;
        if (values.size() == 1) {
            out << name << ',' << format_double(values[0]) << ",,,1\n";
            return;
        }
        const Interval ci = confidence_interval(values, level);
        out << name << ',' << format_double(ci.mean) << ',' << format_double(ci.low) << ','
            << format_double(ci.high) << ',' << values.size() << '\n';
    };
    emit("mae", maes);
    emit("nmae", nmaes);
}

void write_importance_csv(std::ostream& out, const ImportanceTable& table,
                          std::size_t top_n) {
    out << "state,rank,feature,score\n";
    for (const auto& [state, entries] : table.per_state) {
        const std::size_t n = std::min(top_n, entries.size());
        for (std::size_t i = 0; i < n; ++i) {
            out << state << ',' << (i + 1) << ',' << csv_escape(entries[i].first) << ','
                << format_double(entries[i].second) << '\n';
        }
    }
}

void write_frequency_csv(std::ostream& out, const FrequencyReport& report) {
    out << "feature,top" << report.k_small << "_count,top" << report.k_large << "_count\n";
    for (const auto& [feature, counts] : report.counts) {
        out << csv_escape(feature) << ',' << counts.first << ',' << counts.second << '\n';
    }
}

void write_sweep_csv(std::ostream& out,
                     const std::vector<std::pair<std::size_t, double>>& curve) {
    out << "k,mae\n";
    for (const auto& [k, mae] : curve) {
        out << k << ',' << format_double(mae) << '\n';
    }
}

void write_sweep_svg(std::ostream& out,
                     const std::vector<std::pair<std::size_t, double>>& curve) {
    constexpr double width = 640, height = 400;
    constexpr double ml = 70, mr = 20, mt = 30, mb = 50;
    const double plot_w = width - ml - mr;
    const double plot_h = height - mt - mb;

    double k_min = curve.front().first, k_max = curve.back().first;
    if (k_max == k_min) k_max = k_min + 1;
    double y_min = curve.front().second, y_max = curve.front().second;
    for (const auto& [k, v] : curve) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
    }
    if (y_max == y_min) y_max = y_min + 1;
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    auto sx = [&](double k) { return ml + (k - k_min) / (k_max - k_min) * plot_w; };
    auto sy = [&](double v) { return mt + (y_max - v) / (y_max - y_min) * plot_h; };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << mt + plot_h << "\" stroke=\"black\"/>\n";

    out << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (i) out << ' ';
        out << sx(static_cast<double>(curve[i].first)) << ',' << sy(curve[i].second);
    }
    out << "\"/>\n";

    for (const auto& [k, v] : curve) {
        out << "  <circle cx=\"" << sx(static_cast<double>(k)) << "\" cy=\"" << sy(v)
            << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
        out << "  <text x=\"" << sx(static_cast<double>(k)) << "\" y=\"" << mt + plot_h + 18
            << "\" font-size=\"11\" text-anchor=\"middle\">" << k << "</text>\n";
    }
    out << "  <text x=\"12\" y=\"" << sy(y_max - pad)
        << "\" font-size=\"11\" text-anchor=\"start\">" << format_double(y_max - pad)
        << "</text>\n";
    out << "  <text x=\"12\" y=\"" << sy(y_min + pad)
        << "\" font-size=\"11\" text-anchor=\"start\">" << format_double(y_min + pad)
        << "</text>\n";
    out << "  <text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 12
        << "\" font-size=\"12\" text-anchor=\"middle\">features used (k)</text>\n";
    out << "  <text x=\"" << ml + plot_w / 2 << "\" y=\"18\" font-size=\"13\" "
        << "text-anchor=\"middle\">test MAE vs features used</text>\n";
    out << "</svg>\n";
}

void write_loss_curve_csv(std::ostream& out, const std::vector<double>& epoch_loss) {
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        out << (i + 1) << ',' << format_double(epoch_loss[i]) << '\n';
    }
}

} // namespace surveycast
