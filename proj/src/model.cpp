#include "fxtsnet/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fxtsnet/kernels.hpp"
#include "fxtsnet/rng.hpp"

namespace fxtsnet::model {

void Dims::validate() const {
    if (d_x < 1 || d_c < 1 || hidden < 1) throw std::invalid_argument("dims: layers must be >= 1");
    if (d_h < 2) throw std::invalid_argument("dims: d_h must be >= 2");
    if (classes < 2) throw std::invalid_argument("dims: classes must be >= 2");
}

namespace {

Tensor uniform_init(std::size_t rows, std::size_t cols, int fan_in, Rng& rng) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t = Tensor::zeros(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-a, a);
    return t;
}

}  // namespace

ModelParams ModelParams::init(const Dims& dims, std::uint64_t seed) {
    dims.validate();
    Rng rng = Rng::derive(seed, "init");
    ModelParams p;
    p.dims = dims;
    p.seed = seed;
    const auto h = static_cast<std::size_t>(dims.hidden);
    p.phi_w1 = uniform_init(h, dims.d_x, dims.d_x, rng);
    p.phi_b1 = uniform_init(h, 1, dims.d_x, rng);
    p.phi_w2 = uniform_init(dims.d_c, h, dims.hidden, rng);
    p.phi_b2 = uniform_init(dims.d_c, 1, dims.hidden, rng);
    p.f_w1 = uniform_init(h, dims.f_in(), dims.f_in(), rng);
    p.f_b1 = uniform_init(h, 1, dims.f_in(), rng);
    p.f_w2 = uniform_init(h, h, dims.hidden, rng);
    p.f_b2 = uniform_init(h, 1, dims.hidden, rng);
    p.f_w3 = uniform_init(dims.d_h, h, dims.hidden, rng);
    p.f_b3 = uniform_init(dims.d_h, 1, dims.hidden, rng);
    p.psi_w = uniform_init(dims.classes, dims.d_h, dims.d_h, rng);
    p.psi_b = uniform_init(dims.classes, 1, dims.d_h, rng);
    return p;
}

std::vector<Tensor*> param_tensors(ModelParams& p) {
    std::vector<Tensor*> out;
    p.for_each([&](const char*, Tensor& t) { out.push_back(&t); });
    return out;
}

std::vector<const Tensor*> param_tensors(const ModelParams& p) {
    std::vector<const Tensor*> out;
    p.for_each([&](const char*, const Tensor& t) { out.push_back(&t); });
    return out;
}

const std::vector<std::string>& param_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        ModelParams tmp;
        tmp.for_each([&](const char* name, Tensor&) { v.emplace_back(name); });
        return v;
    }();
    return names;
}

ParamNodes bind(ad::Graph& g, const ModelParams& params, bool trainable) {
    ParamNodes n{};
    ad::NodeId* slots[] = {&n.phi_w1, &n.phi_b1, &n.phi_w2, &n.phi_b2, &n.f_w1, &n.f_b1,
                           &n.f_w2,   &n.f_b2,   &n.f_w3,   &n.f_b3,   &n.psi_w, &n.psi_b};
    std::size_t i = 0;
    params.for_each([&](const char* name, const Tensor& t) {
        *slots[i++] = trainable ? g.input(name, t) : g.constant(t);
    });
    return n;
}

ad::NodeId extract_features(ad::Graph& g, const ParamNodes& p, ad::NodeId x) {
    return g.affine(p.phi_w2, g.layer_tanh(p.phi_w1, x, p.phi_b1), p.phi_b2);
}

ad::NodeId dynamics(ad::Graph& g, const ParamNodes& p, double t, ad::NodeId x_c, ad::NodeId h) {
    const ad::NodeId z = g.concat({h, x_c, g.constant_scalar(t)});
    const ad::NodeId l1 = g.layer_tanh(p.f_w1, z, p.f_b1);
    const ad::NodeId l2 = g.layer_tanh(p.f_w2, l1, p.f_b2);
    return g.affine(p.f_w3, l2, p.f_b3);
}

ad::NodeId predict(ad::Graph& g, const ParamNodes& p, ad::NodeId h) {
    return g.affine(p.psi_w, h, p.psi_b);
}

std::vector<ad::NodeId> trajectory_knots(ad::Graph& g, const ParamNodes& p, ad::NodeId x_c,
                                         const ode::SolverConfig& cfg) {
    // h(0) = 0, with d_h taken from f's output bias
    const std::size_t d_h = g.view(p.f_b3).size();
    const ad::NodeId h0n = g.constant(Tensor::zeros(d_h));
    ode::GraphAlgebra alg{g};
    auto field = [&](double t, ad::NodeId h) { return dynamics(g, p, t, x_c, h); };
    return ode::integrate_knots(alg, field, h0n, cfg);
}

ForwardResult forward(const Tensor& x, const ModelParams& params, const ode::SolverConfig& cfg) {
    ad::Graph g;
    const ParamNodes p = bind(g, params, /*trainable=*/false);
    const ad::NodeId xn = g.constant(x);
    const ad::NodeId x_c = extract_features(g, p, xn);
    const auto knots = trajectory_knots(g, p, x_c, cfg);
    ForwardResult r;
    r.traj.times.reserve(knots.size());
    r.traj.states.reserve(knots.size());
    for (int i = 0; i <= cfg.knots; ++i) {
        r.traj.times.push_back(ode::knot_time(i, cfg.knots));
        r.traj.states.push_back(g.value(knots[static_cast<std::size_t>(i)]));
    }
    r.logits = g.value(predict(g, p, knots.back()));
    return r;
}

int argmax(const Tensor& logits) {
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = static_cast<int>(i);
    return best;
}

double spectral_norm(const Tensor& w, int iters) {
    const auto& ops = kernels::active();
    const std::size_t m = w.rows(), n = w.cols();
    Rng rng(0x5eed5eedULL);  // fixed internal stream: result is deterministic
    std::vector<double> u(n), wu(m), v(n);
    for (auto& x : u) x = rng.uniform(-1.0, 1.0);
    for (int it = 0; it < iters; ++it) {
        ops.matvec(w.data(), u.data(), wu.data(), m, n);
        if (std::sqrt(ops.dot(wu.data(), wu.data(), m)) < 1e-300) return 0.0;
        std::fill(v.begin(), v.end(), 0.0);
        ops.matvec_t(w.data(), wu.data(), v.data(), m, n);  // v = W^T (W u)
        const double norm_v = std::sqrt(ops.dot(v.data(), v.data(), n));
        if (norm_v < 1e-300) return 0.0;
        for (std::size_t j = 0; j < n; ++j) u[j] = v[j] / norm_v;
    }
    ops.matvec(w.data(), u.data(), wu.data(), m, n);
    return std::sqrt(ops.dot(wu.data(), wu.data(), m));
}

double lipschitz_phi(const ModelParams& p) {
    return spectral_norm(p.phi_w1) * spectral_norm(p.phi_w2);
}

double lipschitz_f(const ModelParams& p) {
    return spectral_norm(p.f_w1) * spectral_norm(p.f_w2) * spectral_norm(p.f_w3);
}

double lipschitz_psi(const ModelParams& p) { return spectral_norm(p.psi_w); }

// ---- checkpoint JSON -----------------------------------------------------------

namespace {

using json = nlohmann::ordered_json;

json tensor_to_json(const Tensor& t) {
    if (!t.is_matrix()) {
        json arr = json::array();
        for (std::size_t i = 0; i < t.size(); ++i) arr.push_back(t[i]);
        return arr;
    }
    json rows = json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
        rows.push_back(row);
    }
    return rows;
}

Tensor tensor_from_json(const json& j, std::size_t rows, std::size_t cols) {
    std::vector<double> data;
    data.reserve(rows * cols);
    if (cols == 1) {
        if (!j.is_array() || j.size() != rows)
            throw std::runtime_error("checkpoint: vector shape mismatch");
        for (const auto& v : j) data.push_back(v.get<double>());
        return Tensor::vector(std::move(data));
    }
    if (!j.is_array() || j.size() != rows)
        throw std::runtime_error("checkpoint: matrix row count mismatch");
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols)
            throw std::runtime_error("checkpoint: matrix col count mismatch");
        for (const auto& v : row) data.push_back(v.get<double>());
    }
    return Tensor::matrix(rows, cols, std::move(data));
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& p) {
    json j;
    j["format_version"] = 1;
    j["dims"] = {{"d_x", p.dims.d_x},
                 {"d_c", p.dims.d_c},
                 {"d_h", p.dims.d_h},
                 {"hidden", p.dims.hidden},
                 {"classes", p.dims.classes}};
    j["seed"] = p.seed;
    j["theta_phi"] = {{"w1", tensor_to_json(p.phi_w1)},
                      {"b1", tensor_to_json(p.phi_b1)},
                      {"w2", tensor_to_json(p.phi_w2)},
                      {"b2", tensor_to_json(p.phi_b2)}};
    j["theta_f"] = {{"w1", tensor_to_json(p.f_w1)}, {"b1", tensor_to_json(p.f_b1)},
                    {"w2", tensor_to_json(p.f_w2)}, {"b2", tensor_to_json(p.f_b2)},
                    {"w3", tensor_to_json(p.f_w3)}, {"b3", tensor_to_json(p.f_b3)}};
    j["theta_psi"] = {{"w", tensor_to_json(p.psi_w)}, {"b", tensor_to_json(p.psi_b)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    json j;
    in >> j;
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported format_version");
    ModelParams p;
    const auto& d = j.at("dims");
    p.dims.d_x = d.at("d_x").get<int>();
    p.dims.d_c = d.at("d_c").get<int>();
    p.dims.d_h = d.at("d_h").get<int>();
    p.dims.hidden = d.at("hidden").get<int>();
    p.dims.classes = d.at("classes").get<int>();
    p.dims.validate();
    p.seed = j.at("seed").get<std::uint64_t>();
    const auto h = static_cast<std::size_t>(p.dims.hidden);
    const auto& phi = j.at("theta_phi");
    p.phi_w1 = tensor_from_json(phi.at("w1"), h, p.dims.d_x);
    p.phi_b1 = tensor_from_json(phi.at("b1"), h, 1);
    p.phi_w2 = tensor_from_json(phi.at("w2"), p.dims.d_c, h);
    p.phi_b2 = tensor_from_json(phi.at("b2"), p.dims.d_c, 1);
    const auto& f = j.at("theta_f");
    p.f_w1 = tensor_from_json(f.at("w1"), h, p.dims.f_in());
    p.f_b1 = tensor_from_json(f.at("b1"), h, 1);
    p.f_w2 = tensor_from_json(f.at("w2"), h, h);
    p.f_b2 = tensor_from_json(f.at("b2"), h, 1);
    p.f_w3 = tensor_from_json(f.at("w3"), p.dims.d_h, h);
    p.f_b3 = tensor_from_json(f.at("b3"), p.dims.d_h, 1);
    const auto& psi = j.at("theta_psi");
    p.psi_w = tensor_from_json(psi.at("w"), p.dims.classes, p.dims.d_h);
    p.psi_b = tensor_from_json(psi.at("b"), p.dims.classes, 1);
    bool finite = true;
    p.for_each([&](const char*, const Tensor& t) { finite = finite && t.all_finite(); });
    if (!finite) throw std::runtime_error("checkpoint: non-finite weights");
    return p;
}

}  // namespace fxtsnet::model
