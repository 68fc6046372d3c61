#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "floodcast/graph.hpp"

namespace floodcast {

enum class Topology { grid, random_geometric };
enum class ClusterMode { quadrant, single };

/// Synthetic scenario: network layout, elevation field, contagion dynamics,
/// and trace emission. Stands in for real fine-grained traffic data.
struct ScenarioConfig {
    Topology topology = Topology::grid;
    std::int64_t grid_rows = 10;
    std::int64_t grid_cols = 10;
    std::int64_t segments_per_node = 1;  // 1 or 2 road segments per lattice point
    double spacing_km = 6.0;

    std::int64_t segment_count = 100;  // random_geometric only
    double rgg_radius_km = 8.0;        // each new point lands within this of an earlier one

    std::int64_t elevation_bumps = 5;
    double bump_amplitude_m = 10.0;
    double bump_width_km = 15.0;

    std::int64_t flood_seed_count = 3;
    std::int64_t flood_start_step = 240;
    double spread_probability = 0.08;
    double elevation_tolerance_m = 3.0;  // uphill ignition allowance

    std::int64_t rise_steps = 48;
    double peak_depth_mm = 300.0;
    std::int64_t fall_steps = 96;

    std::int64_t step_minutes = 5;
    std::int64_t total_steps = 2016;
    double noise_std_kmh = 2.5;
    ClusterMode cluster_mode = ClusterMode::quadrant;
    std::uint64_t seed = 42;

    void validate() const;
};

ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin);
std::string scenario_to_text(const ScenarioConfig& config);

std::vector<RoadSegment> generate_network(const ScenarioConfig& config);

struct IgnitionEdge {
    std::int64_t step = 0;
    std::int64_t source = -1;  // -1 for initial seeds
    std::int64_t target = 0;
};

struct GroundTruth {
    std::int64_t steps = 0;
    std::int64_t segments = 0;
    std::vector<std::uint8_t> flooded;  // [step][segment]
    std::vector<double> depth_mm;       // [step][segment]
    std::vector<IgnitionEdge> ignitions;

    bool flooded_at(std::int64_t step, std::int64_t segment) const {
        return flooded[static_cast<std::size_t>(step * segments + segment)] != 0;
    }
    double depth_at(std::int64_t step, std::int64_t segment) const {
        return depth_mm[static_cast<std::size_t>(step * segments + segment)];
    }
};

/// Dense speed grid with an explicit null mask, either simulated or ingested.
struct SpeedData {
    std::vector<std::string> segment_ids;
    std::vector<double> historical_kmh;  // per segment
    std::int64_t steps = 0;
    std::int64_t step_minutes = 5;
    std::int64_t start_min = 0;
    std::vector<double> speed_kmh;       // [step][segment]; 0 where null
    std::vector<std::uint8_t> null_mask;  // [step][segment]

    std::int64_t segment_count() const { return static_cast<std::int64_t>(segment_ids.size()); }
    bool is_null(std::int64_t step, std::int64_t segment) const {
        return null_mask[static_cast<std::size_t>(step * segment_count() + segment)] != 0;
    }
    double speed_at(std::int64_t step, std::int64_t segment) const {
        return speed_kmh[static_cast<std::size_t>(step * segment_count() + segment)];
    }
    std::optional<double> observed(std::int64_t step, std::int64_t segment) const {
        if (is_null(step, segment)) return std::nullopt;
        return speed_at(step, segment);
    }
};

struct SimulationResult {
    SpeedData traces;
    GroundTruth truth;
};

/// Flood contagion over the first-adjacency support: seeds ignite at the
/// lowest elevations, each step a flooded segment ignites an eligible
/// neighbor (elevation_j <= elevation_i + tolerance) with the spread
/// probability, and every flooded segment walks the rise/fall depth
/// trajectory before recovering. Speeds follow the depth-speed curve,
/// clipped to [0, historical]; a flooded segment whose speed falls under
/// 10% of historical emits a null record.
SimulationResult simulate(const ScenarioConfig& config,
                          const std::vector<RoadSegment>& segments);

// Trace CSV: segment_id,timestamp_min,speed_kmh,historical_kmh with the
// literal token `null` for missing speeds.
std::string traces_to_csv(const SpeedData& traces);

/// Parses a trace CSV into a dense grid. Timestamps must form a complete
/// uniform grid per segment. When `expected_ids` is given, the columns take
/// that order and unknown segment ids are an error.
SpeedData ingest_traces(const std::string& path,
                        const std::vector<std::string>& expected_ids = {});

std::string ground_truth_to_csv(const GroundTruth& truth,
                                const std::vector<RoadSegment>& segments,
                                std::int64_t step_minutes);
GroundTruth load_ground_truth(const std::string& path,
                              const std::vector<std::string>& expected_ids,
                              std::int64_t expected_steps, std::int64_t step_minutes);

}  // namespace floodcast
