#include "floodcast/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "floodcast/errors.hpp"

namespace floodcast {

std::string to_string(BlockKind kind) {
    switch (kind) {
        case BlockKind::ST: return "ST";
        case BlockKind::ET: return "ET";
        case BlockKind::SET: return "SET";
        case BlockKind::EST: return "EST";
    }
    throw Error("unknown block kind");
}

BlockKind block_kind_from_string(const std::string& name) {
    if (name == "ST") return BlockKind::ST;
    if (name == "ET") return BlockKind::ET;
    if (name == "SET") return BlockKind::SET;
    if (name == "EST") return BlockKind::EST;
    throw ConfigError("unknown block kind '" + name + "'");
}

std::string to_string(Architecture arch) {
    switch (arch) {
        case Architecture::model1: return "model1";
        case Architecture::model2: return "model2";
        case Architecture::model3: return "model3";
        case Architecture::custom: return "custom";
    }
    throw Error("unknown architecture");
}

Architecture architecture_from_string(const std::string& name) {
    if (name == "model1" || name == "1") return Architecture::model1;
    if (name == "model2" || name == "2") return Architecture::model2;
    if (name == "model3" || name == "3") return Architecture::model3;
    if (name == "custom") return Architecture::custom;
    throw ConfigError("unknown architecture '" + name + "'");
}

std::vector<BlockKind> blocks_for(Architecture arch) {
    switch (arch) {
        case Architecture::model1: return {BlockKind::ST, BlockKind::ST};
        case Architecture::model2: return {BlockKind::ET, BlockKind::ST, BlockKind::ST};
        case Architecture::model3: return {BlockKind::SET, BlockKind::SET, BlockKind::SET};
        case Architecture::custom:
            throw ConfigError("custom architecture needs an explicit block list");
    }
    throw Error("unknown architecture");
}

std::vector<AdjacencyKind> adjacency_kinds_for(const std::vector<BlockKind>& kinds) {
    std::vector<AdjacencyKind> out;
    auto push = [&out](AdjacencyKind k) {
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    };
    for (auto kind : kinds) {
        switch (kind) {
            case BlockKind::ST: push(AdjacencyKind::distance); break;
            case BlockKind::ET: push(AdjacencyKind::elevation); break;
            case BlockKind::SET: push(AdjacencyKind::product); break;
            case BlockKind::EST:
                push(AdjacencyKind::elevation);
                push(AdjacencyKind::distance);
                break;
        }
    }
    return out;
}

void Hyperparameters::validate() const {
    if (history_steps < 1 || temporal_kernel < 1 || cheb_order < 1 ||
        temporal_channels < 1 || graph_channels < 1 || block_channels < 1) {
        throw ConfigError("all hyperparameters must be >= 1");
    }
}

Tensor TemporalLayer::forward(const Tensor& x) const {
    auto conv = causal_conv1d(x, kernel.value);
    auto p = slice_channels(conv, 0, out_channels);
    auto q = slice_channels(conv, out_channels, 2 * out_channels);
    if (in_channels >= out_channels) {
        auto aligned = kt > 1 ? slice_time(x, kt - 1, x.dim(0)) : x;
        p = add(p, slice_channels(aligned, 0, out_channels));
    }
    return glu(p, q);
}

Tensor GraphLayer::forward(const Tensor& x) const {
    return cheb_conv(x, theta.value, scaled_laplacian);
}

Tensor ConvBlock::forward(const Tensor& x) const {
    auto h = temporal_in.forward(x);
    for (const auto& layer : graph_layers) {
        h = relu(layer.forward(h));
    }
    h = temporal_out.forward(h);
    return layer_norm(h, ln_gain.value, ln_bias.value);
}

SpectralCacheSet build_caches(const std::vector<RoadSegment>& segments,
                              const std::vector<BlockKind>& kinds,
                              const AdjacencyOptions& options) {
    SpectralCacheSet caches;
    for (auto kind : adjacency_kinds_for(kinds)) {
        switch (kind) {
            case AdjacencyKind::distance:
                caches.emplace(kind, normalized_laplacian(first_adjacency(segments, options)));
                break;
            case AdjacencyKind::elevation:
                caches.emplace(kind, normalized_laplacian(second_adjacency(segments, options)));
                break;
            case AdjacencyKind::product:
                caches.emplace(kind, normalized_laplacian(third_adjacency(segments, options)));
                break;
        }
    }
    return caches;
}

std::int64_t StgcnModel::min_history(std::int64_t blocks, std::int64_t kt) {
    return 2 * blocks * (kt - 1) + 1;
}

std::int64_t StgcnModel::post_block_extent() const {
    return hp_.history_steps -
           2 * static_cast<std::int64_t>(blocks_.size()) * (hp_.temporal_kernel - 1);
}

namespace {

struct Skeleton {
    std::vector<ConvBlock> blocks;
    StgcnModel::OutputHead head;
    std::int64_t node_count = 0;
};

const SpectralCache& cache_for(const SpectralCacheSet& caches, AdjacencyKind kind) {
    auto it = caches.find(kind);
    if (it == caches.end()) {
        throw ConfigError("missing spectral cache for adjacency kind '" + to_string(kind) + "'");
    }
    return it->second;
}

TemporalLayer make_temporal(std::string name, std::int64_t kt, std::int64_t cin,
                            std::int64_t cout) {
    TemporalLayer layer;
    layer.kt = kt;
    layer.in_channels = cin;
    layer.out_channels = cout;
    layer.kernel = Param{std::move(name), Tensor::zeros({kt, cin, 2 * cout})};
    return layer;
}

Skeleton build_skeleton(const std::vector<BlockKind>& kinds, const Hyperparameters& hp,
                        const SpectralCacheSet& caches) {
    hp.validate();
    if (kinds.empty()) {
        throw ConfigError("a model needs at least one block");
    }
    const auto blocks = static_cast<std::int64_t>(kinds.size());
    const auto min_n = StgcnModel::min_history(blocks, hp.temporal_kernel);
    if (hp.history_steps < min_n) {
        throw ConfigError("history length " + std::to_string(hp.history_steps) +
                          " is too short for " + std::to_string(blocks) + " blocks of width " +
                          std::to_string(hp.temporal_kernel) + "; minimum is " +
                          std::to_string(min_n));
    }

    Skeleton s;
    std::int64_t c_in = 1;
    for (std::size_t b = 0; b < kinds.size(); ++b) {
        const std::string prefix = "block" + std::to_string(b) + ".";
        ConvBlock block;
        block.kind = kinds[b];
        block.temporal_in = make_temporal(prefix + "temporal_in.kernel", hp.temporal_kernel,
                                          c_in, hp.temporal_channels);
        auto add_graph = [&](AdjacencyKind kind, std::int64_t gin, std::int64_t gout,
                             std::size_t idx) {
            const auto& cache = cache_for(caches, kind);
            if (s.node_count == 0) {
                s.node_count = cache.node_count();
            } else if (s.node_count != cache.node_count()) {
                throw ConfigError("spectral caches disagree on node count");
            }
            GraphLayer layer;
            layer.theta = Param{prefix + "graph" + std::to_string(idx) + ".theta",
                                Tensor::zeros({hp.cheb_order, gin, gout})};
            layer.scaled_laplacian = cache.scaled_laplacian;
            block.graph_layers.push_back(std::move(layer));
        };
        switch (kinds[b]) {
            case BlockKind::ST:
                add_graph(AdjacencyKind::distance, hp.temporal_channels, hp.graph_channels, 0);
                break;
            case BlockKind::ET:
                add_graph(AdjacencyKind::elevation, hp.temporal_channels, hp.graph_channels, 0);
                break;
            case BlockKind::SET:
                add_graph(AdjacencyKind::product, hp.temporal_channels, hp.graph_channels, 0);
                break;
            case BlockKind::EST:
                add_graph(AdjacencyKind::elevation, hp.temporal_channels, hp.graph_channels, 0);
                add_graph(AdjacencyKind::distance, hp.graph_channels, hp.graph_channels, 1);
                break;
        }
        block.temporal_out = make_temporal(prefix + "temporal_out.kernel", hp.temporal_kernel,
                                           hp.graph_channels, hp.block_channels);
        block.ln_gain = Param{prefix + "ln_gain", Tensor::zeros({hp.block_channels})};
        block.ln_bias = Param{prefix + "ln_bias", Tensor::zeros({hp.block_channels})};
        s.blocks.push_back(std::move(block));
        c_in = hp.block_channels;
    }

    const auto remaining = hp.history_steps - 2 * blocks * (hp.temporal_kernel - 1);
    s.head.temporal = make_temporal("head.temporal.kernel", remaining, hp.block_channels,
                                    hp.block_channels);
    s.head.weights = Param{"head.weights", Tensor::zeros({hp.block_channels})};
    s.head.bias = Param{"head.bias", Tensor::scalar(0.0)};
    return s;
}

}  // namespace

std::vector<Param*> StgcnModel::parameters() {
    std::vector<Param*> out;
    for (auto& block : blocks_) {
        out.push_back(&block.temporal_in.kernel);
        for (auto& layer : block.graph_layers) {
            out.push_back(&layer.theta);
        }
        out.push_back(&block.temporal_out.kernel);
        out.push_back(&block.ln_gain);
        out.push_back(&block.ln_bias);
    }
    out.push_back(&head_.temporal.kernel);
    out.push_back(&head_.weights);
    out.push_back(&head_.bias);
    return out;
}

std::vector<const Param*> StgcnModel::parameters() const {
    auto* self = const_cast<StgcnModel*>(this);
    auto mut = self->parameters();
    return {mut.begin(), mut.end()};
}

StgcnModel StgcnModel::make(Architecture arch, const Hyperparameters& hp,
                            const SpectralCacheSet& caches, std::uint64_t seed) {
    if (arch == Architecture::custom) {
        throw ConfigError("custom architecture needs make_custom with an explicit block list");
    }
    auto model = make_custom(blocks_for(arch), hp, caches, seed);
    model.arch_ = arch;
    return model;
}

StgcnModel StgcnModel::make_custom(const std::vector<BlockKind>& kinds,
                                   const Hyperparameters& hp, const SpectralCacheSet& caches,
                                   std::uint64_t seed) {
    auto skeleton = build_skeleton(kinds, hp, caches);
    StgcnModel model;
    model.arch_ = Architecture::custom;
    model.kinds_ = kinds;
    model.hp_ = hp;
    model.node_count_ = skeleton.node_count;
    model.blocks_ = std::move(skeleton.blocks);
    model.head_ = std::move(skeleton.head);
    model.caches_ = caches;

    std::mt19937_64 rng(seed);
    for (auto* param : model.parameters()) {
        const auto& shape = param->value.shape();
        const auto& name = param->name;
        if (name.ends_with("ln_gain")) {
            param->value = Tensor::full(shape, 1.0).with_requires_grad();
        } else if (name.ends_with("ln_bias") || name.ends_with("bias")) {
            param->value = Tensor::zeros(shape).with_requires_grad();
        } else {
            // Glorot-uniform over the flattened fan of each map.
            double fan_in = 1.0, fan_out = 1.0;
            if (shape.size() == 3) {
                fan_in = static_cast<double>(shape[0] * shape[1]);
                fan_out = static_cast<double>(shape[0] * shape[2]);
            } else {
                fan_in = static_cast<double>(shape[0]);
                fan_out = 1.0;
            }
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            std::vector<double> values(static_cast<std::size_t>(numel(shape)));
            for (auto& v : values) v = dist(rng);
            param->value = Tensor::from_data(shape, std::move(values)).with_requires_grad();
        }
    }
    return model;
}

StgcnModel assemble_model(Architecture arch, std::vector<BlockKind> kinds, Hyperparameters hp,
                          const SpectralCacheSet& caches, std::vector<Param> params) {
    auto skeleton = build_skeleton(kinds, hp, caches);
    StgcnModel model;
    model.arch_ = arch;
    model.kinds_ = std::move(kinds);
    model.hp_ = hp;
    model.node_count_ = skeleton.node_count;
    model.blocks_ = std::move(skeleton.blocks);
    model.head_ = std::move(skeleton.head);
    model.caches_ = caches;

    auto slots = model.parameters();
    if (params.size() != slots.size()) {
        throw CheckpointError("expected " + std::to_string(slots.size()) + " parameters, got " +
                              std::to_string(params.size()));
    }
    for (auto* slot : slots) {
        auto it = std::find_if(params.begin(), params.end(),
                               [&](const Param& p) { return p.name == slot->name; });
        if (it == params.end()) {
            throw CheckpointError("missing parameter '" + slot->name + "'");
        }
        if (it->value.shape() != slot->value.shape()) {
            throw CheckpointError("parameter '" + slot->name + "' has shape " +
                                  shape_str(it->value.shape()) + ", expected " +
                                  shape_str(slot->value.shape()));
        }
        slot->value = it->value.with_requires_grad();
    }
    return model;
}

Tensor StgcnModel::forward(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(2) != 1) {
        throw DimensionError("model input must be [N x M x 1], got " + shape_str(x.shape()));
    }
    if (x.dim(0) != hp_.history_steps) {
        throw ConfigError("input history length " + std::to_string(x.dim(0)) +
                          " does not match the model's N=" + std::to_string(hp_.history_steps) +
                          " (minimum " +
                          std::to_string(min_history(static_cast<std::int64_t>(blocks_.size()),
                                                     hp_.temporal_kernel)) +
                          ")");
    }
    if (x.dim(1) != node_count_) {
        throw DimensionError("input has " + std::to_string(x.dim(1)) + " segments, model has " +
                             std::to_string(node_count_));
    }

    Tensor h = x;
    for (const auto& block : blocks_) {
        h = block.forward(h);
    }
    h = head_.temporal.forward(h);  // [1 x M x c]
    const std::int64_t c = hp_.block_channels;
    auto flat = reshape(h, {node_count_, c});
    auto projected = matmul(flat, reshape(head_.weights.value, {c, 1}));
    return add_bias(reshape(projected, {node_count_}), head_.bias.value);
}

Tensor StgcnModel::rollout(const Tensor& history, std::int64_t steps) const {
    if (steps < 1) {
        throw ConfigError("rollout needs steps >= 1, got " + std::to_string(steps));
    }
    const auto n = hp_.history_steps;
    const auto m = node_count_;
    if (history.rank() != 3 || history.dim(0) != n || history.dim(1) != m ||
        history.dim(2) != 1) {
        throw DimensionError("rollout history must be [" + std::to_string(n) + " x " +
                             std::to_string(m) + " x 1], got " + shape_str(history.shape()));
    }
    std::vector<double> window = history.data();
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps * m));
    for (std::int64_t s = 0; s < steps; ++s) {
        auto pred = forward(Tensor::from_data({n, m, 1}, window));
        out.insert(out.end(), pred.data().begin(), pred.data().end());
        window.erase(window.begin(), window.begin() + m);
        window.insert(window.end(), pred.data().begin(), pred.data().end());
    }
    return Tensor::from_data({steps, m}, std::move(out));
}

}  // namespace floodcast
