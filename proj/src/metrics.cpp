#include "floodcast/metrics.hpp"

#include <cmath>
#include <sstream>

#include "floodcast/csv.hpp"
#include "floodcast/errors.hpp"

namespace floodcast {

StatusSeries StatusSeries::zeros(std::int64_t steps, std::int64_t segments,
                                 Provenance provenance) {
    StatusSeries s;
    s.steps = steps;
    s.segments = segments;
    s.values.assign(static_cast<std::size_t>(steps * segments), 0);
    s.provenance = provenance;
    return s;
}

std::uint8_t StatusSeries::at(std::int64_t step, std::int64_t segment) const {
    return values[static_cast<std::size_t>(step * segments + segment)];
}

void StatusSeries::set(std::int64_t step, std::int64_t segment, bool flooded) {
    values[static_cast<std::size_t>(step * segments + segment)] = flooded ? 1 : 0;
}

int status_from_speed(std::optional<double> speed_kmh, double historical_kmh,
                      double threshold) {
    if (!(historical_kmh > 0.0)) {
        throw DataError("historical speed must be positive, got " +
                        std::to_string(historical_kmh));
    }
    if (!speed_kmh.has_value()) {
        return 1;
    }
    return (*speed_kmh / historical_kmh < threshold) ? 1 : 0;
}

namespace {

void check_same_extent(const StatusSeries& a, const StatusSeries& b) {
    if (a.steps != b.steps || a.segments != b.segments) {
        throw DimensionError("status series extents disagree: " + std::to_string(a.steps) + "x" +
                             std::to_string(a.segments) + " vs " + std::to_string(b.steps) + "x" +
                             std::to_string(b.segments));
    }
}

}  // namespace

MaeRmse mae_rmse(const StatusSeries& predicted, const StatusSeries& observed) {
    check_same_extent(predicted, observed);
    const auto cells = static_cast<double>(predicted.values.size());
    if (cells == 0.0) {
        return {0.0, 0.0};
    }
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < predicted.values.size(); ++i) {
        const double d = static_cast<double>(predicted.values[i]) -
                         static_cast<double>(observed.values[i]);
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    return {abs_sum / cells, std::sqrt(sq_sum / cells)};
}

PrecisionRecall precision_recall(const StatusSeries& predicted, const StatusSeries& observed) {
    check_same_extent(predicted, observed);
    PrecisionRecall out;
    for (std::size_t i = 0; i < predicted.values.size(); ++i) {
        const bool p = predicted.values[i] != 0;
        const bool o = observed.values[i] != 0;
        if (p && o) ++out.confusion.tp;
        else if (p && !o) ++out.confusion.fp;
        else if (!p && o) ++out.confusion.fn;
        else ++out.confusion.tn;
    }
    const auto pos_pred = out.confusion.tp + out.confusion.fp;
    const auto pos_obs = out.confusion.tp + out.confusion.fn;
    if (pos_pred == 0) {
        out.precision = 1.0;
        out.zero_positive = true;
    } else {
        out.precision = static_cast<double>(out.confusion.tp) / static_cast<double>(pos_pred);
    }
    if (pos_obs == 0) {
        out.recall = 1.0;
        out.zero_positive = true;
    } else {
        out.recall = static_cast<double>(out.confusion.tp) / static_cast<double>(pos_obs);
    }
    return out;
}

double depth_to_speed(double depth_mm) {
    if (depth_mm < 0.0) {
        throw DomainError("water depth must be >= 0 mm, got " + std::to_string(depth_mm));
    }
    const double v = kSpeedCurveA * depth_mm * depth_mm - kSpeedCurveB * depth_mm + kSpeedCurveC;
    return v > 0.0 ? v : 0.0;
}

double speed_curve_vertex_depth_mm() { return kSpeedCurveB / (2.0 * kSpeedCurveA); }

double speed_curve_min_speed_kmh() {
    return kSpeedCurveC - kSpeedCurveB * kSpeedCurveB / (4.0 * kSpeedCurveA);
}

double speed_to_depth(double speed_kmh) {
    const double lo = speed_curve_min_speed_kmh();
    const double hi = kSpeedCurveC;
    if (speed_kmh < lo || speed_kmh > hi) {
        std::ostringstream os;
        os << "speed " << speed_kmh << " km/h is outside the invertible range [" << lo << ", "
           << hi << "]";
        throw DomainError(os.str());
    }
    // Smaller root of a w^2 - b w + (c - v) = 0.
    const double disc = kSpeedCurveB * kSpeedCurveB -
                        4.0 * kSpeedCurveA * (kSpeedCurveC - speed_kmh);
    const double root = std::sqrt(disc < 0.0 ? 0.0 : disc);
    return (kSpeedCurveB - root) / (2.0 * kSpeedCurveA);
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "horizon_hours,mae,rmse,precision,recall,tp,fp,fn,tn,zero_positive_flag\n";
    for (const auto& r : report.rows) {
        os << csv::format_double(r.horizon_hours) << ',' << csv::format_double(r.mae) << ','
           << csv::format_double(r.rmse) << ',' << csv::format_double(r.precision) << ','
           << csv::format_double(r.recall) << ',' << r.tp << ',' << r.fp << ',' << r.fn << ','
           << r.tn << ',' << (r.zero_positive ? 1 : 0) << '\n';
    }
    return os.str();
}

EvalReport report_from_csv(const std::string& path) {
    static const std::vector<std::string> header{
        "horizon_hours", "mae", "rmse", "precision", "recall",
        "tp", "fp", "fn", "tn", "zero_positive_flag"};
    EvalReport report;
    for (const auto& row : csv::read_rows(path, header)) {
        EvalRow r;
        const std::string ctx = path;
        r.horizon_hours = csv::parse_double(row[0], ctx);
        r.mae = csv::parse_double(row[1], ctx);
        r.rmse = csv::parse_double(row[2], ctx);
        r.precision = csv::parse_double(row[3], ctx);
        r.recall = csv::parse_double(row[4], ctx);
        r.tp = csv::parse_int(row[5], ctx);
        r.fp = csv::parse_int(row[6], ctx);
        r.fn = csv::parse_int(row[7], ctx);
        r.tn = csv::parse_int(row[8], ctx);
        r.zero_positive = csv::parse_int(row[9], ctx) != 0;
        report.rows.push_back(r);
    }
    return report;
}

std::string report_to_long_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "horizon_hours,metric,value\n";
    for (const auto& r : report.rows) {
        os << csv::format_double(r.horizon_hours) << ",mae," << csv::format_double(r.mae) << '\n';
        os << csv::format_double(r.horizon_hours) << ",rmse," << csv::format_double(r.rmse)
           << '\n';
        os << csv::format_double(r.horizon_hours) << ",precision,"
           << csv::format_double(r.precision) << '\n';
        os << csv::format_double(r.horizon_hours) << ",recall," << csv::format_double(r.recall)
           << '\n';
    }
    return os.str();
}

}  // namespace floodcast
