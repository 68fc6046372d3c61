#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "floodcast/tensor.hpp"

namespace floodcast {

struct RoadSegment {
    std::string id;
    double mid_x_km = 0.0;
    double mid_y_km = 0.0;
    double elevation_m = 0.0;
    double length_m = 0.0;
    std::int64_t cluster = 0;
    double historical_speed_kmh = 0.0;
};

enum class AdjacencyKind { distance, elevation, product };

std::string to_string(AdjacencyKind kind);
AdjacencyKind adjacency_kind_from_string(const std::string& name);

struct AdjacencyOptions {
    // Replaces the unbounded downhill weight; 1.0 is the supremum of
    // exp(-e^2/100), so downhill coupling stays maximal and the Laplacian
    // stays finite.
    double w_max = 1.0;
};

/// Road network with one of the three weighted adjacency constructions.
/// W is M x M, zero on the diagonal, all entries finite and >= 0.
struct RoadGraph {
    std::vector<RoadSegment> segments;
    Tensor weights;  // [M x M]
    AdjacencyKind kind = AdjacencyKind::distance;

    std::int64_t node_count() const { return static_cast<std::int64_t>(segments.size()); }
};

/// W_ij = exp(-d_ij^2 / 100) when i != j and the value exceeds 0.3, else 0;
/// d_ij is the Euclidean midpoint distance in kilometers.
RoadGraph first_adjacency(const std::vector<RoadSegment>& segments,
                          const AdjacencyOptions& options = {});

/// Directional elevation coupling with e_ij = elevation_i - elevation_j in
/// meters: w_max when e_ij < 0, exp(-e_ij^2 / 100) when e_ij > 0, and 1.0
/// when e_ij = 0 (both one-sided limits agree); diagonal stays 0.
RoadGraph second_adjacency(const std::vector<RoadSegment>& segments,
                           const AdjacencyOptions& options = {});

/// Entrywise product of the first and second adjacency.
RoadGraph third_adjacency(const std::vector<RoadSegment>& segments,
                          const AdjacencyOptions& options = {});

/// Normalized Laplacian L = I - D^{-1/2} W D^{-1/2} plus the scaled form
/// used by the Chebyshev recursion.
struct SpectralCache {
    Tensor laplacian;         // [M x M]
    double lambda_max = 0.0;  // largest eigenvalue, from power iteration
    Tensor scaled_laplacian;  // 2 L / lambda_max - I

    std::int64_t node_count() const { return laplacian.dim(0); }
};

/// Builds the spectral cache. Zero-degree rows keep L_ii = 1 with zero
/// off-diagonals. An all-zero W gets lambda_max = 2, the generic bound,
/// which makes the scaled Laplacian vanish.
SpectralCache normalized_laplacian(const RoadGraph& graph,
                                   double tolerance = 1e-9,
                                   int max_iterations = 10000);

/// Chebyshev filter coefficients, one [C_in x C_out] matrix per order.
struct ChebFilter {
    Tensor theta;  // [K x C_in x C_out]

    std::int64_t order() const { return theta.dim(0); }
    std::int64_t in_channels() const { return theta.dim(1); }
    std::int64_t out_channels() const { return theta.dim(2); }
};

/// Applies sum_k theta_k T_k(L_tilde) to a graph signal x [M x C_in] via
/// the three-term recursion; returns [M x C_out].
Tensor cheb_apply(const SpectralCache& cache, const ChebFilter& filter, const Tensor& x);

struct ClusterPartition {
    std::int64_t cluster = 0;
    std::vector<std::size_t> indices;  // positions in the input segment order
    std::vector<RoadSegment> segments;
};

/// One partition per distinct cluster label, ordered by label.
std::vector<ClusterPartition> partition_by_cluster(const std::vector<RoadSegment>& segments);

// Segment table CSV:
// id,mid_x_km,mid_y_km,elevation_m,length_m,cluster,historical_speed_kmh
std::vector<RoadSegment> load_segments(const std::string& path);
std::string segments_to_csv(const std::vector<RoadSegment>& segments);

}  // namespace floodcast
