#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace floodcast {

inline constexpr double kDefaultFloodThreshold = 0.10;

// Speed-depth curve v(w) = a w^2 - b w + c with w in millimeters. The curve
// bottoms out at w = b / 2a; it never reaches zero.
inline constexpr double kSpeedCurveA = 0.0009;
inline constexpr double kSpeedCurveB = 0.5529;
inline constexpr double kSpeedCurveC = 86.9948;

enum class Provenance { observed, predicted };

/// Binary flooded/not-flooded labels per segment per step, row-major
/// [step][segment].
struct StatusSeries {
    std::int64_t steps = 0;
    std::int64_t segments = 0;
    std::vector<std::uint8_t> values;
    Provenance provenance = Provenance::observed;

    static StatusSeries zeros(std::int64_t steps, std::int64_t segments, Provenance provenance);
    std::uint8_t at(std::int64_t step, std::int64_t segment) const;
    void set(std::int64_t step, std::int64_t segment, bool flooded);
};

/// Null speed means inundated; otherwise flooded iff speed/historical falls
/// below the threshold ratio.
int status_from_speed(std::optional<double> speed_kmh, double historical_kmh,
                      double threshold = kDefaultFloodThreshold);

struct MaeRmse {
    double mae = 0.0;
    double rmse = 0.0;
};

/// Mean absolute and root-mean-square status error over all (segment, step)
/// cells; both normalize by segments * steps.
MaeRmse mae_rmse(const StatusSeries& predicted, const StatusSeries& observed);

struct Confusion {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
};

struct PrecisionRecall {
    double precision = 1.0;
    double recall = 1.0;
    Confusion confusion;
    // An empty denominator reports 1.0 with this flag raised, so reports are
    // never silently optimistic.
    bool zero_positive = false;
};

/// Flooded counts as positive.
PrecisionRecall precision_recall(const StatusSeries& predicted, const StatusSeries& observed);

double depth_to_speed(double depth_mm);

/// Inverts the curve onto its falling branch (smaller root). Valid for
/// speeds between the curve minimum and v(0); throws DomainError outside.
double speed_to_depth(double speed_kmh);

double speed_curve_vertex_depth_mm();
double speed_curve_min_speed_kmh();

struct EvalRow {
    double horizon_hours = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    bool zero_positive = false;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

std::string report_to_csv(const EvalReport& report);
EvalReport report_from_csv(const std::string& path);

/// One row per (horizon, metric) pair for plotting.
std::string report_to_long_csv(const EvalReport& report);

}  // namespace floodcast
