#include "ipnet/embedder.hpp"
#include "ipnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ipnet {

namespace {

struct ForwardCache {
    std::vector<Matrix> activations;  // activations[0] is the input
    std::vector<Matrix> pre_activations;
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    Matrix z(x.rows(), layer.out);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto outr = z.row(r);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.weight.data() + o * layer.in;
            double s = layer.bias[o];
            for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * in[i];
            outr[o] = s;
        }
    }
    return z;
}

ForwardCache forward_cached(const ParameterSet& params, const Matrix& batch) {
    ForwardCache cache;
    cache.activations.push_back(batch);
    for (std::size_t l = 0; l < params.size(); ++l) {
        Matrix z = dense_forward(params[l], cache.activations.back());
        Matrix a = z;
        if (l + 1 < params.size())
            for (auto& v : a.data()) v = v > 0.0 ? v : 0.0;
        cache.pre_activations.push_back(std::move(z));
        cache.activations.push_back(std::move(a));
    }
    return cache;
}

/// Accumulates parameter gradients for d(loss)/d(output) = `upstream`.
void backprop(const ParameterSet& params, const ForwardCache& cache, Matrix upstream, ParameterSet& grads) {
    for (std::size_t l = params.size(); l-- > 0;) {
        const DenseLayer& layer = params[l];
        const Matrix& z = cache.pre_activations[l];
        const Matrix& input = cache.activations[l];
        if (l + 1 < params.size())
            for (std::size_t k = 0; k < upstream.data().size(); ++k)
                if (z.data()[k] <= 0.0) upstream.data()[k] = 0.0;

        DenseLayer& g = grads[l];
        Matrix down(input.rows(), layer.in);
        for (std::size_t r = 0; r < upstream.rows(); ++r) {
            const auto dz = upstream.row(r);
            const auto a = input.row(r);
            auto dx = down.row(r);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = dz[o];
                if (d == 0.0) continue;
                g.bias[o] += d;
                double* gw = g.weight.data() + o * layer.in;
                const double* w = layer.weight.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) {
                    gw[i] += d * a[i];
                    dx[i] += d * w[i];
                }
            }
        }
        upstream = std::move(down);
    }
}

std::size_t class_slot(const PrototypeSet& protos, int label) {
    const auto it = std::lower_bound(protos.class_ids.begin(), protos.class_ids.end(), label);
    if (it == protos.class_ids.end() || *it != label)
        throw std::invalid_argument("query class " + std::to_string(label) + " has no support samples");
    return static_cast<std::size_t>(it - protos.class_ids.begin());
}

struct QueryLoss {
    double loss = 0.0;
    Matrix d_support;
    Matrix d_query;
};

// Loss over the query rows given embedded support/query and fixed prototype weights.
QueryLoss query_loss(const Matrix& support_emb, const Matrix& query_emb, std::span<const int> query_labels,
                     const PrototypeSet& protos, bool with_gradient) {
    if (query_emb.empty()) throw std::invalid_argument("episode_loss: empty query set");
    const auto centers = apply_prototype_weights(support_emb, protos);
    const std::size_t n_classes = protos.size();
    const double inv_q = 1.0 / static_cast<double>(query_emb.rows());

    QueryLoss out;
    if (with_gradient) {
        out.d_support = Matrix(support_emb.rows(), support_emb.cols());
        out.d_query = Matrix(query_emb.rows(), query_emb.cols());
    }
    std::vector<FeatureVector> d_centers(n_classes, FeatureVector(support_emb.cols(), 0.0));
    std::vector<double> dist(n_classes);

    for (std::size_t q = 0; q < query_emb.rows(); ++q) {
        const std::size_t target = class_slot(protos, query_labels[q]);
        for (std::size_t c = 0; c < n_classes; ++c) dist[c] = euclidean_distance(query_emb.row(q), centers[c]);
        const double shift = *std::min_element(dist.begin(), dist.end());
        double z = 0.0;
        for (double d : dist) z += std::exp(-(d - shift));
        out.loss += (dist[target] - shift + std::log(z)) * inv_q;
        if (!with_gradient) continue;

        for (std::size_t c = 0; c < n_classes; ++c) {
            const double prob = std::exp(-(dist[c] - shift)) / z;
            const double g = ((c == target ? 1.0 : 0.0) - prob) * inv_q;
            if (g == 0.0 || dist[c] == 0.0) continue;  // d||u|| at u = 0 taken as 0
            const double scale = g / dist[c];
            auto dq = out.d_query.row(q);
            for (std::size_t k = 0; k < dq.size(); ++k) {
                const double diff = (query_emb(q, k) - centers[c][k]) * scale;
                dq[k] += diff;
                d_centers[c][k] -= diff;
            }
        }
    }
    if (with_gradient) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            const auto& rows = protos.members[c];
            const auto& w = protos.weights_used[c];
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto ds = out.d_support.row(rows[i]);
                for (std::size_t k = 0; k < ds.size(); ++k) ds[k] += w[i] * d_centers[c][k];
            }
        }
    }
    return out;
}

void check_batch(const LabeledSet& set, const char* what) {
    if (set.features.rows() != set.labels.size())
        throw std::invalid_argument(std::string(what) + ": label/row count mismatch");
}

std::string join_dims(const std::vector<std::size_t>& dims) {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
    return s;
}

}  // namespace

void EmbedderSpec::validate() const {
    if (kind == EmbedderKind::Identity) return;
    if (layer_dims.size() < 2) throw std::invalid_argument("feedforward embedder needs at least 2 layer dims");
    for (auto d : layer_dims)
        if (d == 0) throw std::invalid_argument("feedforward layer dims must be positive");
}

std::string EmbedderSpec::to_string() const {
    if (kind == EmbedderKind::Identity) return "identity";
    return "feedforward:" + join_dims(layer_dims);
}

EmbedderSpec EmbedderSpec::parse(const std::string& text) {
    if (text == "identity") return identity();
    const std::string prefix = "feedforward:";
    if (text.rfind(prefix, 0) != 0)
        throw std::invalid_argument("embedder: expected identity | feedforward:<d0>,<d1>,..., got '" + text + "'");
    std::vector<std::size_t> dims;
    std::stringstream ss(text.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = parse_int(trim(item));
        if (!v || *v <= 0) throw std::invalid_argument("embedder: bad layer dim '" + item + "'");
        dims.push_back(static_cast<std::size_t>(*v));
    }
    auto spec = feed_forward(std::move(dims));
    spec.validate();
    return spec;
}

ParameterSet zeros_like(const ParameterSet& like) {
    ParameterSet out = like;
    for (auto& l : out) {
        std::fill(l.weight.begin(), l.weight.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    return out;
}

std::size_t parameter_count(const ParameterSet& params) {
    std::size_t n = 0;
    for (const auto& l : params) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> flatten(const ParameterSet& params) {
    std::vector<double> out;
    out.reserve(parameter_count(params));
    for (const auto& l : params) {
        out.insert(out.end(), l.weight.begin(), l.weight.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void unflatten(std::span<const double> values, ParameterSet& params) {
    if (values.size() != parameter_count(params)) throw std::invalid_argument("unflatten: size mismatch");
    auto it = values.begin();
    for (auto& l : params) {
        std::copy_n(it, l.weight.size(), l.weight.begin());
        it += static_cast<std::ptrdiff_t>(l.weight.size());
        std::copy_n(it, l.bias.size(), l.bias.begin());
        it += static_cast<std::ptrdiff_t>(l.bias.size());
    }
}

Embedder Embedder::initialize(const EmbedderSpec& spec, Rng& rng) {
    spec.validate();
    Embedder e;
    e.spec_ = spec;
    if (spec.kind == EmbedderKind::Identity) return e;
    for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        DenseLayer layer;
        layer.in = spec.layer_dims[l];
        layer.out = spec.layer_dims[l + 1];
        const double s = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        std::uniform_real_distribution<double> dist(-s, s);
        layer.weight.resize(layer.in * layer.out);
        for (auto& w : layer.weight) w = dist(rng);
        layer.bias.assign(layer.out, 0.0);
        e.params_.push_back(std::move(layer));
    }
    return e;
}

Embedder Embedder::from_parameters(const EmbedderSpec& spec, ParameterSet params) {
    spec.validate();
    const std::size_t expected = spec.kind == EmbedderKind::Identity ? 0 : spec.layer_dims.size() - 1;
    if (params.size() != expected) throw std::invalid_argument("embedder: layer count does not match spec");
    for (std::size_t l = 0; l < params.size(); ++l) {
        const auto& p = params[l];
        if (p.in != spec.layer_dims[l] || p.out != spec.layer_dims[l + 1] || p.weight.size() != p.in * p.out ||
            p.bias.size() != p.out)
            throw std::invalid_argument("embedder: layer " + std::to_string(l) + " shape does not match spec");
    }
    Embedder e;
    e.spec_ = spec;
    e.params_ = std::move(params);
    return e;
}

Matrix Embedder::embed(const Matrix& batch) const {
    if (!trainable()) return batch;
    if (batch.cols() != spec_.layer_dims.front())
        throw std::invalid_argument("embed: input dimension " + std::to_string(batch.cols()) + ", embedder expects " +
                                    std::to_string(spec_.layer_dims.front()));
    return std::move(forward_cached(params_, batch).activations.back());
}

std::size_t Embedder::output_dim(std::size_t input_dim) const {
    if (!trainable()) return input_dim;
    if (input_dim != spec_.layer_dims.front())
        throw std::invalid_argument("embedder expects input dimension " + std::to_string(spec_.layer_dims.front()) +
                                    ", got " + std::to_string(input_dim));
    return spec_.layer_dims.back();
}

double episode_loss(const Embedder& embedder, const LabeledSet& support, const LabeledSet& query,
                    const PrototypeStrategy& strategy) {
    check_batch(support, "support");
    check_batch(query, "query");
    const Matrix s = embedder.embed(support.features);
    const Matrix q = embedder.embed(query.features);
    const auto protos = compute_all_prototypes(s, support.labels, strategy);
    return query_loss(s, q, query.labels, protos, false).loss;
}

LossGradient backward(const Embedder& embedder, const LabeledSet& support, const LabeledSet& query,
                      const PrototypeStrategy& strategy) {
    check_batch(support, "support");
    check_batch(query, "query");
    LossGradient result;
    if (!embedder.trainable()) {
        result.loss = episode_loss(embedder, support, query, strategy);
        return result;
    }
    if (support.features.cols() != query.features.cols())
        throw std::invalid_argument("backward: support and query dimensions differ");

    // Support and query share one forward pass.
    Matrix stacked = support.features;
    for (std::size_t r = 0; r < query.features.rows(); ++r) stacked.append_row(query.features.row(r));
    if (stacked.cols() != embedder.spec().layer_dims.front())
        throw std::invalid_argument("backward: input dimension does not match embedder");
    const ForwardCache cache = forward_cached(embedder.parameters(), stacked);
    const Matrix& out = cache.activations.back();

    const std::size_t ns = support.features.rows();
    std::vector<std::size_t> s_idx(ns), q_idx(query.features.rows());
    for (std::size_t i = 0; i < ns; ++i) s_idx[i] = i;
    for (std::size_t i = 0; i < q_idx.size(); ++i) q_idx[i] = ns + i;
    const Matrix s_emb = out.select_rows(s_idx);
    const Matrix q_emb = out.select_rows(q_idx);

    const auto protos = compute_all_prototypes(s_emb, support.labels, strategy);
    QueryLoss ql = query_loss(s_emb, q_emb, query.labels, protos, true);
    result.loss = ql.loss;

    Matrix upstream = ql.d_support;
    for (std::size_t r = 0; r < ql.d_query.rows(); ++r) upstream.append_row(ql.d_query.row(r));
    result.gradient = zeros_like(embedder.parameters());
    backprop(embedder.parameters(), cache, std::move(upstream), result.gradient);
    return result;
}

void OptimizerState::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
}

void sgd_step(ParameterSet& params, const ParameterSet& grads, OptimizerState& opt) {
    opt.validate();
    if (grads.size() != params.size()) throw std::invalid_argument("sgd_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < params.size(); ++l)
        if (grads[l].weight.size() != params[l].weight.size() || grads[l].bias.size() != params[l].bias.size())
            throw std::invalid_argument("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
    if (opt.velocity.empty()) opt.velocity = zeros_like(params);
    if (opt.velocity.size() != params.size()) throw std::invalid_argument("sgd_step: velocity shape mismatch");

    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& v) {
        if (v.size() != p.size()) throw std::invalid_argument("sgd_step: velocity shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = opt.momentum * v[i] + g[i];
            p[i] -= opt.learning_rate * v[i];
        }
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].weight, grads[l].weight, opt.velocity[l].weight);
        update(params[l].bias, grads[l].bias, opt.velocity[l].bias);
    }
}

void write_checkpoint(std::ostream& os, const Embedder& embedder) {
    os << "ipnet-checkpoint 1\n";
    os << "embedder " << embedder.spec().to_string() << "\n";
    const auto& params = embedder.parameters();
    auto values = [&](const std::vector<double>& v) {
        for (double x : v) os << ' ' << format_double(x);
        os << "\n";
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        os << "layer " << l << " weight " << params[l].out << " " << params[l].in;
        values(params[l].weight);
        os << "layer " << l << " bias " << params[l].out << " 1";
        values(params[l].bias);
    }
    os << "end\n";
}

Embedder read_checkpoint(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> std::istringstream {
        if (!std::getline(is, line)) throw std::runtime_error("checkpoint: unexpected end of input");
        ++line_no;
        return std::istringstream(line);
    };
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("checkpoint line " + std::to_string(line_no) + ": " + what);
    };

    auto header = next();
    std::string magic;
    int version = 0;
    if (!(header >> magic >> version) || magic != "ipnet-checkpoint" || version != 1) fail("bad header");
    auto spec_line = next();
    std::string tag, spec_text;
    if (!(spec_line >> tag >> spec_text) || tag != "embedder") fail("expected 'embedder <spec>'");
    const EmbedderSpec spec = EmbedderSpec::parse(spec_text);

    ParameterSet params;
    const std::size_t n_layers = spec.kind == EmbedderKind::Identity ? 0 : spec.layer_dims.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        DenseLayer layer;
        for (const char* field : {"weight", "bias"}) {
            auto rec = next();
            std::string kw, name;
            std::size_t idx = 0, rows = 0, cols = 0;
            if (!(rec >> kw >> idx >> name >> rows >> cols) || kw != "layer" || idx != l || name != field)
                fail(std::string("expected 'layer ") + std::to_string(l) + " " + field + " <rows> <cols>'");
            std::vector<double> v(rows * cols);
            for (auto& x : v) {
                std::string tok;
                if (!(rec >> tok)) fail("too few values");
                const auto parsed = parse_double(tok);
                if (!parsed) fail("bad number '" + tok + "'");
                x = *parsed;
            }
            std::string extra;
            if (rec >> extra) fail("too many values");
            if (name == "weight") {
                layer.out = rows;
                layer.in = cols;
                layer.weight = std::move(v);
            } else {
                if (rows != layer.out || cols != 1) fail("bias shape does not match weight");
                layer.bias = std::move(v);
            }
        }
        params.push_back(std::move(layer));
    }
    auto end = next();
    std::string kw;
    if (!(end >> kw) || kw != "end") fail("expected 'end'");
    return Embedder::from_parameters(spec, std::move(params));
}

void save_checkpoint(const std::string& path, const Embedder& embedder) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    write_checkpoint(os, embedder);
    if (!os) throw std::runtime_error("error writing checkpoint '" + path + "'");
}

Embedder load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read checkpoint '" + path + "'");
    return read_checkpoint(is);
}

}  // namespace ipnet
