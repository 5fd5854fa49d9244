#include "fxtsnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "fxtsnet/kernels.hpp"

namespace fxtsnet::ad {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("autodiff: " + msg); }

}  // namespace

const Graph::Node& Graph::node(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) fail("node id out of range");
    return nodes_[static_cast<std::size_t>(id)];
}

NodeId Graph::push(Op op, std::span<const NodeId> parents, std::int32_t rows, std::int32_t cols,
                   double attr, std::int32_t attr_i, double attr2) {
    if (parents.size() > 3) fail("too many parents");
    Node n{};
    n.op = op;
    n.nparents = static_cast<std::uint8_t>(parents.size());
    n.rows = rows;
    n.cols = cols;
    n.attr = attr;
    n.attr2 = attr2;
    n.attr_i = attr_i;
    n.off = val_.size();
    n.requires_grad = (op == Op::kInput);
    for (std::size_t i = 0; i < parents.size(); ++i) {
        n.p[i] = parents[i];
        n.requires_grad = n.requires_grad || node(parents[i]).requires_grad;
    }
    val_.resize(val_.size() + static_cast<std::size_t>(rows) * cols, 0.0);
    nodes_.push_back(n);
    const auto id = static_cast<NodeId>(nodes_.size() - 1);
    compute(static_cast<std::size_t>(id));
    return id;
}

NodeId Graph::input(std::string name, const Tensor& value) {
    if (!value.all_finite()) fail("non-finite input tensor '" + name + "'");
    const NodeId id = push(Op::kInput, {}, static_cast<std::int32_t>(value.rows()),
                           static_cast<std::int32_t>(value.cols()));
    std::copy(value.data(), value.data() + value.size(), val_.begin() + nodes_.back().off);
    inputs_.emplace_back(std::move(name), id);
    return id;
}

NodeId Graph::constant(const Tensor& value) {
    if (!value.all_finite()) fail("non-finite constant tensor");
    const NodeId id = push(Op::kConstant, {}, static_cast<std::int32_t>(value.rows()),
                           static_cast<std::int32_t>(value.cols()));
    std::copy(value.data(), value.data() + value.size(), val_.begin() + nodes_.back().off);
    return id;
}

NodeId Graph::constant_scalar(double v) { return constant(Tensor::scalar(v)); }

NodeId Graph::add(NodeId a, NodeId b) {
    const Node &na = node(a), &nb = node(b);
    if (na.rows != nb.rows || na.cols != nb.cols) fail("add: shape mismatch");
    const NodeId ps[] = {a, b};
    return push(Op::kAdd, ps, na.rows, na.cols);
}

NodeId Graph::sub(NodeId a, NodeId b) {
    const Node &na = node(a), &nb = node(b);
    if (na.rows != nb.rows || na.cols != nb.cols) fail("sub: shape mismatch");
    const NodeId ps[] = {a, b};
    return push(Op::kSub, ps, na.rows, na.cols);
}

NodeId Graph::scale(NodeId a, double c) {
    const Node& na = node(a);
    const NodeId ps[] = {a};
    return push(Op::kScale, ps, na.rows, na.cols, c);
}

NodeId Graph::matvec(NodeId w, NodeId x) {
    const Node &nw = node(w), &nx = node(x);
    if (nx.cols != 1) fail("matvec: x must be a vector");
    if (nw.cols != nx.rows) fail("matvec: W cols != x length");
    const NodeId ps[] = {w, x};
    return push(Op::kMatVec, ps, nw.rows, 1);
}

NodeId Graph::concat(std::span<const NodeId> parts) {
    if (parts.empty() || parts.size() > 3) fail("concat: expects 1..3 parts");
    std::int32_t total = 0;
    for (NodeId p : parts) {
        if (node(p).cols != 1) fail("concat: vector parts only");
        total += node(p).rows;
    }
    return push(Op::kConcat, parts, total, 1);
}

NodeId Graph::tanh(NodeId a) {
    const Node& na = node(a);
    const NodeId ps[] = {a};
    return push(Op::kTanh, ps, na.rows, na.cols);
}

NodeId Graph::relu(NodeId a) {
    const Node& na = node(a);
    const NodeId ps[] = {a};
    return push(Op::kRelu, ps, na.rows, na.cols);
}

NodeId Graph::pow_clamped(NodeId a, double exponent) {
    const Node& na = node(a);
    const NodeId ps[] = {a};
    return push(Op::kPowClamped, ps, na.rows, na.cols, exponent);
}

NodeId Graph::dot(NodeId a, NodeId b) {
    const Node &na = node(a), &nb = node(b);
    if (na.rows != nb.rows || na.cols != 1 || nb.cols != 1) fail("dot: vector shape mismatch");
    const NodeId ps[] = {a, b};
    return push(Op::kDot, ps, 1, 1);
}

NodeId Graph::sum(NodeId a) {
    const NodeId ps[] = {a};
    return push(Op::kSum, ps, 1, 1);
}

NodeId Graph::l2norm(NodeId a) {
    if (node(a).cols != 1) fail("l2norm: vector expected");
    const NodeId ps[] = {a};
    return push(Op::kL2Norm, ps, 1, 1);
}

NodeId Graph::softmax_cross_entropy(NodeId logits, int label) {
    const Node& nl = node(logits);
    if (nl.cols != 1) fail("softmax_cross_entropy: logits must be a vector");
    if (label < 0 || label >= nl.rows) fail("softmax_cross_entropy: label out of range");
    const NodeId ps[] = {logits};
    return push(Op::kSoftmaxCrossEntropy, ps, 1, 1, 0.0, label);
}

NodeId Graph::relu_hinge(NodeId a) {
    const Node& na = node(a);
    const NodeId ps[] = {a};
    return push(Op::kReluHinge, ps, na.rows, na.cols);
}

NodeId Graph::axpy(NodeId a, double c, NodeId b) {
    const Node &na = node(a), &nb = node(b);
    if (na.rows != nb.rows || na.cols != nb.cols) fail("axpy: shape mismatch");
    const NodeId ps[] = {a, b};
    return push(Op::kAxpy, ps, na.rows, na.cols, c);
}

NodeId Graph::wsum3(NodeId a, NodeId b, NodeId c, double w1, double w2) {
    const Node &na = node(a), &nb = node(b), &nc = node(c);
    if (na.rows != nb.rows || na.cols != nb.cols || na.rows != nc.rows || na.cols != nc.cols)
        fail("wsum3: shape mismatch");
    const NodeId ps[] = {a, b, c};
    return push(Op::kWSum3, ps, na.rows, na.cols, w1, 0, w2);
}

NodeId Graph::affine(NodeId w, NodeId x, NodeId b) {
    const Node &nw = node(w), &nx = node(x), &nb = node(b);
    if (nx.cols != 1 || nb.cols != 1) fail("affine: x and b must be vectors");
    if (nw.cols != nx.rows || nw.rows != nb.rows) fail("affine: shape mismatch");
    const NodeId ps[] = {w, x, b};
    return push(Op::kAffine, ps, nw.rows, 1);
}

NodeId Graph::layer_tanh(NodeId w, NodeId x, NodeId b) {
    const Node &nw = node(w), &nx = node(x), &nb = node(b);
    if (nx.cols != 1 || nb.cols != 1) fail("layer_tanh: x and b must be vectors");
    if (nw.cols != nx.rows || nw.rows != nb.rows) fail("layer_tanh: shape mismatch");
    const NodeId ps[] = {w, x, b};
    return push(Op::kLayerTanh, ps, nw.rows, 1);
}

void Graph::compute(std::size_t idx) {
    const auto& ops = kernels::active();
    Node& n = nodes_[idx];
    double* out = val_.data() + n.off;
    const std::size_t len = static_cast<std::size_t>(n.rows) * n.cols;
    auto pv = [&](int i) { return val_.data() + nodes_[static_cast<std::size_t>(n.p[i])].off; };
    auto plen = [&](int i) {
        const Node& p = nodes_[static_cast<std::size_t>(n.p[i])];
        return static_cast<std::size_t>(p.rows) * p.cols;
    };

    switch (n.op) {
        case Op::kInput:
        case Op::kConstant:
            break;
        case Op::kAdd:
            ops.add(pv(0), pv(1), out, len);
            break;
        case Op::kSub:
            ops.sub(pv(0), pv(1), out, len);
            break;
        case Op::kScale:
            ops.scal(n.attr, pv(0), out, len);
            break;
        case Op::kMatVec: {
            const Node& w = nodes_[static_cast<std::size_t>(n.p[0])];
            ops.matvec(pv(0), pv(1), out, static_cast<std::size_t>(w.rows),
                       static_cast<std::size_t>(w.cols));
            break;
        }
        case Op::kConcat: {
            std::size_t at = 0;
            for (int i = 0; i < n.nparents; ++i) {
                std::memcpy(out + at, pv(i), plen(i) * sizeof(double));
                at += plen(i);
            }
            break;
        }
        case Op::kTanh: {
            const double* in = pv(0);
            for (std::size_t i = 0; i < len; ++i) out[i] = std::tanh(in[i]);
            break;
        }
        case Op::kRelu:
            ops.relu(pv(0), out, len);
            break;
        case Op::kPowClamped: {
            const double* in = pv(0);
            for (std::size_t i = 0; i < len; ++i) {
                if (in[i] < 0.0) fail("pow_clamped: negative base");
                out[i] = std::pow(in[i], n.attr);
            }
            break;
        }
        case Op::kDot:
            out[0] = ops.dot(pv(0), pv(1), plen(0));
            break;
        case Op::kSum: {
            const double* in = pv(0);
            double acc = 0.0;
            for (std::size_t i = 0; i < plen(0); ++i) acc += in[i];
            out[0] = acc;
            break;
        }
        case Op::kL2Norm:
            out[0] = std::sqrt(ops.dot(pv(0), pv(0), plen(0)));
            break;
        case Op::kSoftmaxCrossEntropy: {
            const double* l = pv(0);
            const std::size_t c = plen(0);
            double m = l[0];
            for (std::size_t i = 1; i < c; ++i) m = std::max(m, l[i]);
            double acc = 0.0;
            for (std::size_t i = 0; i < c; ++i) acc += std::exp(l[i] - m);
            out[0] = m + std::log(acc) - l[static_cast<std::size_t>(n.attr_i)];
            break;
        }
        case Op::kReluHinge:
            ops.relu(pv(0), out, len);
            break;
        case Op::kAxpy:
            // same op sequence as scale-then-add keeps the tensor and graph
            // integration paths bit-identical
            ops.scal(n.attr, pv(1), out, len);
            ops.add(pv(0), out, out, len);
            break;
        case Op::kWSum3: {
            const double *a = pv(0), *b = pv(1), *c = pv(2);
            const double w1 = n.attr, w2 = n.attr2;
            for (std::size_t i = 0; i < len; ++i) out[i] = (a[i] + w1 * b[i]) + w2 * c[i];
            break;
        }
        case Op::kAffine: {
            const Node& w = nodes_[static_cast<std::size_t>(n.p[0])];
            ops.matvec(pv(0), pv(1), out, static_cast<std::size_t>(w.rows),
                       static_cast<std::size_t>(w.cols));
            ops.add(out, pv(2), out, len);
            break;
        }
        case Op::kLayerTanh: {
            const Node& w = nodes_[static_cast<std::size_t>(n.p[0])];
            ops.matvec(pv(0), pv(1), out, static_cast<std::size_t>(w.rows),
                       static_cast<std::size_t>(w.cols));
            ops.add(out, pv(2), out, len);
            for (std::size_t i = 0; i < len; ++i) out[i] = std::tanh(out[i]);
            break;
        }
    }
}

void Graph::push_adjoints(std::size_t idx) {
    const auto& ops = kernels::active();
    const Node& n = nodes_[idx];
    const double* a = adj_.data() + n.off;
    const std::size_t len = static_cast<std::size_t>(n.rows) * n.cols;
    auto pv = [&](int i) { return val_.data() + nodes_[static_cast<std::size_t>(n.p[i])].off; };
    auto pa = [&](int i) { return adj_.data() + nodes_[static_cast<std::size_t>(n.p[i])].off; };
    auto plen = [&](int i) {
        const Node& p = nodes_[static_cast<std::size_t>(n.p[i])];
        return static_cast<std::size_t>(p.rows) * p.cols;
    };
    auto wants = [&](int i) { return nodes_[static_cast<std::size_t>(n.p[i])].requires_grad; };

    switch (n.op) {
        case Op::kInput:
        case Op::kConstant:
            break;
        case Op::kAdd:
            if (wants(0)) ops.axpy(1.0, a, pa(0), len);
            if (wants(1)) ops.axpy(1.0, a, pa(1), len);
            break;
        case Op::kSub:
            if (wants(0)) ops.axpy(1.0, a, pa(0), len);
            if (wants(1)) ops.axpy(-1.0, a, pa(1), len);
            break;
        case Op::kScale:
            if (wants(0)) ops.axpy(n.attr, a, pa(0), len);
            break;
        case Op::kMatVec: {
            const Node& w = nodes_[static_cast<std::size_t>(n.p[0])];
            const auto m = static_cast<std::size_t>(w.rows);
            const auto k = static_cast<std::size_t>(w.cols);
            if (wants(0)) ops.ger(pa(0), a, pv(1), m, k);      // dW += a x^T
            if (wants(1)) ops.matvec_t(pv(0), a, pa(1), m, k);  // dx += W^T a
            break;
        }
        case Op::kConcat: {
            std::size_t at = 0;
            for (int i = 0; i < n.nparents; ++i) {
                if (wants(i)) ops.axpy(1.0, a + at, pa(i), plen(i));
                at += plen(i);
            }
            break;
        }
        case Op::kTanh:
            if (wants(0)) ops.tanh_bwd(a, val_.data() + n.off, pa(0), len);
            break;
        case Op::kRelu:
        case Op::kReluHinge:
            // subgradient 0 at the kink
            if (wants(0)) ops.relu_bwd(a, pv(0), pa(0), len);
            break;
        case Op::kPowClamped:
            if (wants(0)) {
                const double* in = pv(0);
                double* d = pa(0);
                for (std::size_t i = 0; i < len; ++i) {
                    const double base = std::max(in[i], kGradClamp);
                    d[i] += a[i] * n.attr * std::pow(base, n.attr - 1.0);
                }
            }
            break;
        case Op::kDot:
            if (wants(0)) ops.axpy(a[0], pv(1), pa(0), plen(0));
            if (wants(1)) ops.axpy(a[0], pv(0), pa(1), plen(0));
            break;
        case Op::kSum:
            if (wants(0)) {
                double* d = pa(0);
                for (std::size_t i = 0; i < plen(0); ++i) d[i] += a[0];
            }
            break;
        case Op::kL2Norm:
            if (wants(0)) {
                const double norm = std::max(val_[n.off], kGradClamp);
                ops.axpy(a[0] / norm, pv(0), pa(0), plen(0));
            }
            break;
        case Op::kSoftmaxCrossEntropy:
            if (wants(0)) {
                const double* l = pv(0);
                double* d = pa(0);
                const std::size_t c = plen(0);
                double m = l[0];
                for (std::size_t i = 1; i < c; ++i) m = std::max(m, l[i]);
                double acc = 0.0;
                for (std::size_t i = 0; i < c; ++i) acc += std::exp(l[i] - m);
                for (std::size_t i = 0; i < c; ++i) {
                    double g = std::exp(l[i] - m) / acc;
                    if (i == static_cast<std::size_t>(n.attr_i)) g -= 1.0;
                    d[i] += a[0] * g;
                }
            }
            break;
        case Op::kAxpy:
            if (wants(0)) ops.axpy(1.0, a, pa(0), len);
            if (wants(1)) ops.axpy(n.attr, a, pa(1), len);
            break;
        case Op::kWSum3:
            if (wants(0)) ops.axpy(1.0, a, pa(0), len);
            if (wants(1)) ops.axpy(n.attr, a, pa(1), len);
            if (wants(2)) ops.axpy(n.attr2, a, pa(2), len);
            break;
        case Op::kAffine: {
            const Node& w = nodes_[static_cast<std::size_t>(n.p[0])];
            const auto m = static_cast<std::size_t>(w.rows);
            const auto k = static_cast<std::size_t>(w.cols);
            if (wants(0)) ops.ger(pa(0), a, pv(1), m, k);
            if (wants(1)) ops.matvec_t(pv(0), a, pa(1), m, k);
            if (wants(2)) ops.axpy(1.0, a, pa(2), len);
            break;
        }
        case Op::kLayerTanh: {
            const Node& w = nodes_[static_cast<std::size_t>(n.p[0])];
            const auto m = static_cast<std::size_t>(w.rows);
            const auto k = static_cast<std::size_t>(w.cols);
            thread_local std::vector<double> scratch;
            scratch.assign(len, 0.0);
            ops.tanh_bwd(a, val_.data() + n.off, scratch.data(), len);
            if (wants(0)) ops.ger(pa(0), scratch.data(), pv(1), m, k);
            if (wants(1)) ops.matvec_t(pv(0), scratch.data(), pa(1), m, k);
            if (wants(2)) ops.axpy(1.0, scratch.data(), pa(2), len);
            break;
        }
    }
}

Tensor Graph::value(NodeId id) const {
    const Node& n = node(id);
    std::vector<double> data(val_.begin() + n.off,
                             val_.begin() + n.off + static_cast<std::size_t>(n.rows) * n.cols);
    if (n.cols == 1) return Tensor::vector(std::move(data));
    return Tensor::matrix(static_cast<std::size_t>(n.rows), static_cast<std::size_t>(n.cols),
                          std::move(data));
}

double Graph::scalar_value(NodeId id) const {
    const Node& n = node(id);
    if (n.rows * n.cols != 1) fail("scalar_value: node is not scalar");
    return val_[n.off];
}

std::span<const double> Graph::view(NodeId id) const {
    const Node& n = node(id);
    return {val_.data() + n.off, static_cast<std::size_t>(n.rows) * n.cols};
}

void Graph::set_input(std::string_view name, const Tensor& value) {
    if (!value.all_finite()) fail("non-finite input tensor '" + std::string(name) + "'");
    for (auto& [nm, id] : inputs_) {
        if (nm == name) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (static_cast<std::size_t>(n.rows) != value.rows() ||
                static_cast<std::size_t>(n.cols) != value.cols())
                fail("set_input: shape mismatch for '" + std::string(name) + "'");
            std::copy(value.data(), value.data() + value.size(), val_.begin() + n.off);
            return;
        }
    }
    fail("unbound input '" + std::string(name) + "'");
}

void Graph::recompute() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) compute(i);
}

void Graph::backward(NodeId root) {
    const Node& r = node(root);
    if (r.rows * r.cols != 1) fail("gradient: non-scalar root");
    adj_.assign(val_.size(), 0.0);
    adj_[r.off] = 1.0;
    for (std::size_t i = static_cast<std::size_t>(root) + 1; i-- > 0;) {
        if (nodes_[i].requires_grad) push_adjoints(i);
    }
}

std::span<const double> Graph::adjoint_view(NodeId id) const {
    const Node& n = node(id);
    return {adj_.data() + n.off, static_cast<std::size_t>(n.rows) * n.cols};
}

std::map<std::string, Tensor, std::less<>> Graph::gradient(NodeId root,
                                                           std::span<const std::string> wrt) {
    backward(root);
    std::map<std::string, Tensor, std::less<>> out;
    for (const auto& name : wrt) {
        bool found = false;
        for (auto& [nm, id] : inputs_) {
            if (nm == name) {
                const Node& n = nodes_[static_cast<std::size_t>(id)];
                std::vector<double> data(
                    adj_.begin() + n.off,
                    adj_.begin() + n.off + static_cast<std::size_t>(n.rows) * n.cols);
                out.emplace(name, n.cols == 1 ? Tensor::vector(std::move(data))
                                              : Tensor::matrix(static_cast<std::size_t>(n.rows),
                                                               static_cast<std::size_t>(n.cols),
                                                               std::move(data)));
                found = true;
                break;
            }
        }
        if (!found) fail("gradient: requested input '" + name + "' not in graph");
    }
    return out;
}

Tensor Graph::gradient_one(NodeId root, std::string_view input_name) {
    const std::string names[] = {std::string(input_name)};
    auto m = gradient(root, names);
    return m.begin()->second;
}

void Graph::reset() {
    nodes_.clear();
    val_.clear();
    adj_.clear();
    inputs_.clear();
}

Tensor evaluate(Graph& g, NodeId root, const std::vector<std::pair<std::string, Tensor>>& inputs) {
    if (!inputs.empty()) {
        for (const auto& [name, value] : inputs) g.set_input(name, value);
        g.recompute();
    }
    return g.value(root);
}

std::map<std::string, Tensor, std::less<>> gradient(
    Graph& g, NodeId root, const std::vector<std::pair<std::string, Tensor>>& inputs,
    std::span<const std::string> wrt) {
    if (!inputs.empty()) {
        for (const auto& [name, value] : inputs) g.set_input(name, value);
        g.recompute();
    }
    return g.gradient(root, wrt);
}

}  // namespace fxtsnet::ad
