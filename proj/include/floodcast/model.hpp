#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "floodcast/graph.hpp"
#include "floodcast/tensor.hpp"

namespace floodcast {

/// Temporal-graph-temporal sandwiches over the three adjacency kinds. EST
/// stacks an elevation and a distance graph layer between its temporal pair.
enum class BlockKind { ST, ET, SET, EST };

enum class Architecture { model1, model2, model3, custom };

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& name);
std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

/// Block composition per architecture: model1 = [ST, ST],
/// model2 = [ET, ST, ST], model3 = [SET, SET, SET].
std::vector<BlockKind> blocks_for(Architecture arch);

/// Adjacency kinds a block sequence needs, in first-use order.
std::vector<AdjacencyKind> adjacency_kinds_for(const std::vector<BlockKind>& kinds);

struct Hyperparameters {
    std::int64_t history_steps = 12;      // N
    std::int64_t temporal_kernel = 3;     // Kt
    std::int64_t cheb_order = 3;          // K
    std::int64_t temporal_channels = 64;  // width after each block's first temporal layer
    std::int64_t graph_channels = 16;     // width after the graph layer(s)
    std::int64_t block_channels = 64;     // block output width, also the head width c

    void validate() const;
};

struct Param {
    std::string name;
    Tensor value;
};

/// Gated temporal convolution: causal conv to 2*C_out channels split into
/// (P, Q), output (P + residual) * sigmoid(Q). The residual passes the
/// input's first C_out channels through, time-aligned, and applies only
/// when C_in >= C_out.
struct TemporalLayer {
    std::int64_t kt = 0;
    std::int64_t in_channels = 0;
    std::int64_t out_channels = 0;
    Param kernel;  // [Kt x C_in x 2*C_out]

    Tensor forward(const Tensor& x) const;
};

struct GraphLayer {
    Param theta;  // [K x C_in x C_out]
    Tensor scaled_laplacian;

    Tensor forward(const Tensor& x) const;
};

struct ConvBlock {
    BlockKind kind = BlockKind::ST;
    TemporalLayer temporal_in;
    std::vector<GraphLayer> graph_layers;  // one; two for EST (elevation, then distance)
    TemporalLayer temporal_out;
    Param ln_gain;  // [C_out]
    Param ln_bias;  // [C_out]

    /// temporal -> graph conv + ReLU (per layer) -> temporal -> layer norm.
    /// Time extent shrinks by 2*(Kt-1).
    Tensor forward(const Tensor& x) const;
};

using SpectralCacheSet = std::map<AdjacencyKind, SpectralCache>;

/// Builds the spectral caches a block sequence needs from one segment set.
SpectralCacheSet build_caches(const std::vector<RoadSegment>& segments,
                              const std::vector<BlockKind>& kinds,
                              const AdjacencyOptions& options = {});

class StgcnModel {
  public:
    /// Constructs a model with seeded parameter initialization. Throws
    /// ConfigError when history_steps is too short for the block count.
    static StgcnModel make(Architecture arch, const Hyperparameters& hp,
                           const SpectralCacheSet& caches, std::uint64_t seed);
    static StgcnModel make_custom(const std::vector<BlockKind>& kinds, const Hyperparameters& hp,
                                  const SpectralCacheSet& caches, std::uint64_t seed);

    /// One-step prediction: x [N x M x 1] -> normalized speeds [M].
    Tensor forward(const Tensor& x) const;

    /// Recursive multi-step prediction. Each predicted vector becomes the
    /// newest history row; returns all intermediate predictions [steps x M].
    Tensor rollout(const Tensor& history, std::int64_t steps) const;

    std::vector<Param*> parameters();
    std::vector<const Param*> parameters() const;

    Architecture architecture() const { return arch_; }
    const std::vector<BlockKind>& block_kinds() const { return kinds_; }
    const Hyperparameters& hyperparameters() const { return hp_; }
    std::int64_t node_count() const { return node_count_; }
    /// Time extent left after all blocks; the head kernel collapses it to 1.
    std::int64_t post_block_extent() const;
    /// Smallest usable history length for `blocks` blocks of width `kt`.
    static std::int64_t min_history(std::int64_t blocks, std::int64_t kt);

    const std::vector<ConvBlock>& blocks() const { return blocks_; }
    const SpectralCacheSet& caches() const { return caches_; }

    struct OutputHead {
        TemporalLayer temporal;  // kernel width equals the post-block extent
        Param weights;           // [c]
        Param bias;              // [1]
    };
    const OutputHead& head() const { return head_; }

  private:
    Architecture arch_ = Architecture::model1;
    std::vector<BlockKind> kinds_;
    Hyperparameters hp_;
    std::int64_t node_count_ = 0;
    std::vector<ConvBlock> blocks_;
    OutputHead head_;
    SpectralCacheSet caches_;

    friend StgcnModel assemble_model(Architecture, std::vector<BlockKind>, Hyperparameters,
                                     const SpectralCacheSet&, std::vector<Param>);
};

/// Rebuilds a model from explicit parameter tensors (checkpoint loading).
/// Parameter names and shapes must match what `make` produces.
StgcnModel assemble_model(Architecture arch, std::vector<BlockKind> kinds, Hyperparameters hp,
                          const SpectralCacheSet& caches, std::vector<Param> params);

}  // namespace floodcast
