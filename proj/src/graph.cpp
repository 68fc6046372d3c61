#include "floodcast/graph.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "floodcast/csv.hpp"
#include "floodcast/errors.hpp"

namespace floodcast {

namespace {

constexpr double kDistanceScale = 100.0;   // km^2 divisor in exp(-d^2/100)
constexpr double kDistanceFloor = 0.3;     // entries at or below this are cut
constexpr double kElevationScale = 100.0;  // m^2 divisor in exp(-e^2/100)

void check_finite_midpoints(const std::vector<RoadSegment>& segments) {
    if (segments.size() < 2) {
        throw DataError("adjacency needs at least 2 segments, got " +
                        std::to_string(segments.size()));
    }
    for (const auto& s : segments) {
        if (!std::isfinite(s.mid_x_km) || !std::isfinite(s.mid_y_km)) {
            throw DataError("segment " + s.id + " has non-finite midpoint");
        }
    }
}

void check_finite_elevations(const std::vector<RoadSegment>& segments) {
    if (segments.size() < 2) {
        throw DataError("adjacency needs at least 2 segments, got " +
                        std::to_string(segments.size()));
    }
    for (const auto& s : segments) {
        if (!std::isfinite(s.elevation_m)) {
            throw DataError("segment " + s.id + " has non-finite elevation");
        }
    }
}

std::vector<double> distance_weights(const std::vector<RoadSegment>& segments) {
    const auto m = static_cast<std::int64_t>(segments.size());
    std::vector<double> w(static_cast<std::size_t>(m * m), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double dx = segments[i].mid_x_km - segments[j].mid_x_km;
            const double dy = segments[i].mid_y_km - segments[j].mid_y_km;
            const double v = std::exp(-(dx * dx + dy * dy) / kDistanceScale);
            if (v > kDistanceFloor) {
                w[static_cast<std::size_t>(i * m + j)] = v;
            }
        }
    }
    return w;
}

std::vector<double> elevation_weights(const std::vector<RoadSegment>& segments, double w_max) {
    const auto m = static_cast<std::int64_t>(segments.size());
    std::vector<double> w(static_cast<std::size_t>(m * m), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double e = segments[i].elevation_m - segments[j].elevation_m;
            w[static_cast<std::size_t>(i * m + j)] =
                e < 0.0 ? w_max : std::exp(-e * e / kElevationScale);
        }
    }
    return w;
}

}  // namespace

std::string to_string(AdjacencyKind kind) {
    switch (kind) {
        case AdjacencyKind::distance: return "distance";
        case AdjacencyKind::elevation: return "elevation";
        case AdjacencyKind::product: return "product";
    }
    throw Error("unknown adjacency kind");
}

AdjacencyKind adjacency_kind_from_string(const std::string& name) {
    if (name == "distance") return AdjacencyKind::distance;
    if (name == "elevation") return AdjacencyKind::elevation;
    if (name == "product") return AdjacencyKind::product;
    throw ConfigError("unknown adjacency kind '" + name + "'");
}

RoadGraph first_adjacency(const std::vector<RoadSegment>& segments,
                          const AdjacencyOptions&) {
    check_finite_midpoints(segments);
    const auto m = static_cast<std::int64_t>(segments.size());
    return RoadGraph{segments, Tensor::from_data({m, m}, distance_weights(segments)),
                     AdjacencyKind::distance};
}

RoadGraph second_adjacency(const std::vector<RoadSegment>& segments,
                           const AdjacencyOptions& options) {
    check_finite_elevations(segments);
    const auto m = static_cast<std::int64_t>(segments.size());
    return RoadGraph{segments,
                     Tensor::from_data({m, m}, elevation_weights(segments, options.w_max)),
                     AdjacencyKind::elevation};
}

RoadGraph third_adjacency(const std::vector<RoadSegment>& segments,
                          const AdjacencyOptions& options) {
    check_finite_midpoints(segments);
    check_finite_elevations(segments);
    const auto m = static_cast<std::int64_t>(segments.size());
    auto dist = distance_weights(segments);
    const auto elev = elevation_weights(segments, options.w_max);
    for (std::size_t i = 0; i < dist.size(); ++i) {
        dist[i] *= elev[i];
    }
    return RoadGraph{segments, Tensor::from_data({m, m}, std::move(dist)),
                     AdjacencyKind::product};
}

SpectralCache normalized_laplacian(const RoadGraph& graph, double tolerance,
                                   int max_iterations) {
    const std::int64_t m = graph.node_count();
    const auto& w = graph.weights.data();
    for (double v : w) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DataError("adjacency weights must be finite and non-negative");
        }
    }

    std::vector<double> degree(static_cast<std::size_t>(m), 0.0);
    bool any_edge = false;
    for (std::int64_t i = 0; i < m; ++i) {
        double d = 0.0;
        for (std::int64_t j = 0; j < m; ++j) {
            d += w[static_cast<std::size_t>(i * m + j)];
        }
        degree[static_cast<std::size_t>(i)] = d;
        any_edge = any_edge || d > 0.0;
    }

    std::vector<double> inv_sqrt(static_cast<std::size_t>(m), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        if (degree[static_cast<std::size_t>(i)] > 0.0) {
            inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(degree[static_cast<std::size_t>(i)]);
        }
    }

    std::vector<double> lap(static_cast<std::size_t>(m * m), 0.0);
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            const double a = w[static_cast<std::size_t>(i * m + j)] *
                             inv_sqrt[static_cast<std::size_t>(i)] *
                             inv_sqrt[static_cast<std::size_t>(j)];
            lap[static_cast<std::size_t>(i * m + j)] = (i == j ? 1.0 : 0.0) - a;
        }
    }

    double lambda_max;
    if (!any_edge) {
        // Isolated graph: L = I; take the generic normalized-Laplacian bound
        // so the scaled Laplacian vanishes.
        lambda_max = 2.0;
    } else {
        // Power iteration on L + I; the shift makes the top eigenvalue of a
        // symmetric normalized Laplacian strictly dominant in modulus. Stops
        // on the residual ||(L+I)v - est v|| (bounds the eigenvalue error for
        // symmetric graphs) or on Rayleigh-quotient stagnation, which handles
        // near-degenerate top pairs where the residual decays too slowly.
        std::vector<double> v(static_cast<std::size_t>(m));
        for (std::int64_t i = 0; i < m; ++i) {
            v[static_cast<std::size_t>(i)] = 1.0 + static_cast<double>(i % 7) * 0.125;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;

        std::vector<double> next(static_cast<std::size_t>(m));
        double estimate = 0.0;
        bool converged = false;
        int used = 0;
        for (int it = 0; it < max_iterations; ++it) {
            for (std::int64_t i = 0; i < m; ++i) {
                double acc = v[static_cast<std::size_t>(i)];  // the +I shift
                const double* row = lap.data() + i * m;
                for (std::int64_t j = 0; j < m; ++j) {
                    acc += row[j] * v[static_cast<std::size_t>(j)];
                }
                next[static_cast<std::size_t>(i)] = acc;
            }
            double next_norm = 0.0;
            double quotient = 0.0;  // v^T (L + I) v with unit v
            for (std::int64_t i = 0; i < m; ++i) {
                next_norm += next[static_cast<std::size_t>(i)] * next[static_cast<std::size_t>(i)];
                quotient += v[static_cast<std::size_t>(i)] * next[static_cast<std::size_t>(i)];
            }
            next_norm = std::sqrt(next_norm);
            if (next_norm == 0.0) {
                throw NumericError("power iteration collapsed to zero after " +
                                   std::to_string(it + 1) + " iterations");
            }
            const double prev = estimate;
            estimate = quotient;
            double residual = 0.0;
            for (std::int64_t i = 0; i < m; ++i) {
                const double r = next[static_cast<std::size_t>(i)] -
                                 estimate * v[static_cast<std::size_t>(i)];
                residual += r * r;
                v[static_cast<std::size_t>(i)] = next[static_cast<std::size_t>(i)] / next_norm;
            }
            used = it + 1;
            const double scale = std::max(1.0, std::abs(estimate));
            if (std::sqrt(residual) <= tolerance * scale ||
                (it > 0 && std::abs(estimate - prev) <= tolerance * scale)) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            throw NumericError("power iteration did not converge within " +
                               std::to_string(used) + " iterations");
        }
        lambda_max = estimate - 1.0;
        if (lambda_max <= 0.0) {
            throw NumericError("power iteration produced non-positive lambda_max");
        }
    }

    std::vector<double> scaled(lap.size());
    const double f = 2.0 / lambda_max;
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < m; ++j) {
            scaled[static_cast<std::size_t>(i * m + j)] =
                f * lap[static_cast<std::size_t>(i * m + j)] - (i == j ? 1.0 : 0.0);
        }
    }

    return SpectralCache{Tensor::from_data({m, m}, std::move(lap)), lambda_max,
                         Tensor::from_data({m, m}, std::move(scaled))};
}

Tensor cheb_apply(const SpectralCache& cache, const ChebFilter& filter, const Tensor& x) {
    if (x.rank() != 2) {
        throw DimensionError("cheb_apply: expected signal [M x C_in], got " +
                             shape_str(x.shape()));
    }
    const std::int64_t m = x.dim(0), cin = x.dim(1);
    auto x3 = reshape(x, {1, m, cin});
    auto y = cheb_conv(x3, filter.theta, cache.scaled_laplacian);
    return reshape(y, {m, filter.out_channels()});
}

std::vector<ClusterPartition> partition_by_cluster(const std::vector<RoadSegment>& segments) {
    std::map<std::int64_t, ClusterPartition> by_label;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto& part = by_label[segments[i].cluster];
        part.cluster = segments[i].cluster;
        part.indices.push_back(i);
        part.segments.push_back(segments[i]);
    }
    std::vector<ClusterPartition> out;
    out.reserve(by_label.size());
    for (auto& [label, part] : by_label) {
        out.push_back(std::move(part));
    }
    return out;
}

std::vector<RoadSegment> load_segments(const std::string& path) {
    static const std::vector<std::string> header{
        "id", "mid_x_km", "mid_y_km", "elevation_m", "length_m", "cluster",
        "historical_speed_kmh"};
    const auto rows = csv::read_rows(path, header);
    std::vector<RoadSegment> segments;
    segments.reserve(rows.size());
    for (const auto& row : rows) {
        RoadSegment s;
        s.id = row[0];
        if (s.id.empty()) {
            throw DataError(path + ": empty segment id");
        }
        const std::string ctx = path + " segment " + s.id;
        s.mid_x_km = csv::parse_double(row[1], ctx);
        s.mid_y_km = csv::parse_double(row[2], ctx);
        s.elevation_m = csv::parse_double(row[3], ctx);
        s.length_m = csv::parse_double(row[4], ctx);
        s.cluster = csv::parse_int(row[5], ctx);
        s.historical_speed_kmh = csv::parse_double(row[6], ctx);
        if (!(s.length_m > 0.0)) {
            throw DataError(ctx + ": length must be positive");
        }
        if (!(s.historical_speed_kmh > 0.0)) {
            throw DataError(ctx + ": historical speed must be positive");
        }
        segments.push_back(std::move(s));
    }
    return segments;
}

std::string segments_to_csv(const std::vector<RoadSegment>& segments) {
    std::ostringstream os;
    os << "id,mid_x_km,mid_y_km,elevation_m,length_m,cluster,historical_speed_kmh\n";
    for (const auto& s : segments) {
        os << s.id << ',' << csv::format_double(s.mid_x_km) << ','
           << csv::format_double(s.mid_y_km) << ',' << csv::format_double(s.elevation_m) << ','
           << csv::format_double(s.length_m) << ',' << s.cluster << ','
           << csv::format_double(s.historical_speed_kmh) << '\n';
    }
    return os.str();
}

}  // namespace floodcast
