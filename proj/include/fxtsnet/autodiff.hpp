#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxtsnet/tensor.hpp"

// Reverse-mode autodiff over dense f64 tensors. Define-by-run tape: values
// are computed eagerly as nodes are built, the backward pass walks the tape
// in reverse. Graphs are rebuilt per batch; reset() keeps the slab capacity
// so steady-state training does not allocate.

namespace fxtsnet::ad {

using NodeId = std::int32_t;

enum class Op : std::uint8_t {
    kInput,
    kConstant,
    kAdd,
    kSub,
    kScale,
    kMatVec,
    kConcat,
    kTanh,
    kRelu,
    kPowClamped,
    kDot,
    kSum,
    kL2Norm,
    kSoftmaxCrossEntropy,
    kReluHinge,
    // fused compositions of the primitives above (hot-loop forms)
    kAxpy,      // a + c*b
    kWSum3,     // a + w1*b + w2*c
    kAffine,    // W x + b
    kLayerTanh, // tanh(W x + b)
};

// Base of fractional powers (and the l2norm denominator) is clamped here in
// the backward pass; forward values are exact.
inline constexpr double kGradClamp = 1e-12;

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // ---- leaves ------------------------------------------------------------
    NodeId input(std::string name, const Tensor& value);   // differentiable
    NodeId constant(const Tensor& value);                   // no gradient
    NodeId constant_scalar(double v);

    // ---- primitives ----------------------------------------------------------
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId matvec(NodeId w, NodeId x);
    NodeId concat(std::span<const NodeId> parts);
    NodeId concat(std::initializer_list<NodeId> parts) {
        return concat(std::span<const NodeId>(parts.begin(), parts.size()));
    }
    NodeId tanh(NodeId a);
    NodeId relu(NodeId a);
    NodeId pow_clamped(NodeId a, double exponent);
    NodeId dot(NodeId a, NodeId b);
    NodeId sum(NodeId a);
    NodeId l2norm(NodeId a);
    NodeId softmax_cross_entropy(NodeId logits, int label);
    NodeId relu_hinge(NodeId a);

    // fused forms; gradients equal the equivalent primitive compositions
    NodeId axpy(NodeId a, double c, NodeId b);                     // a + c*b
    NodeId wsum3(NodeId a, NodeId b, NodeId c, double w1, double w2);
    NodeId affine(NodeId w, NodeId x, NodeId b);                   // W x + b
    NodeId layer_tanh(NodeId w, NodeId x, NodeId b);               // tanh(W x + b)

    // ---- values ---------------------------------------------------------------
    Tensor value(NodeId id) const;
    double scalar_value(NodeId id) const;
    std::span<const double> view(NodeId id) const;
    std::size_t node_count() const { return nodes_.size(); }

    // ---- re-evaluation ---------------------------------------------------------
    void set_input(std::string_view name, const Tensor& value);
    void recompute();  // re-run forward over the whole tape

    // ---- gradients ------------------------------------------------------------
    // Reverse accumulation from a scalar root. Returns d(root)/d(input) for
    // each requested input name.
    std::map<std::string, Tensor, std::less<>> gradient(NodeId root,
                                                        std::span<const std::string> wrt);
    Tensor gradient_one(NodeId root, std::string_view input_name);

    // Runs backward only; adjoints stay in the tape for adjoint_view().
    void backward(NodeId root);
    std::span<const double> adjoint_view(NodeId id) const;

    void reset();  // clear the tape, keep capacity

private:
    struct Node {
        Op op;
        std::uint8_t nparents;
        bool requires_grad;
        NodeId p[3];
        std::int32_t rows, cols;
        double attr;          // scale factor / power exponent / first weight
        double attr2;         // second weight of wsum3
        std::int32_t attr_i;  // softmax-cross-entropy label
        std::size_t off;      // offset into the value/adjoint slabs
    };

    NodeId push(Op op, std::span<const NodeId> parents, std::int32_t rows, std::int32_t cols,
                double attr = 0.0, std::int32_t attr_i = 0, double attr2 = 0.0);
    void compute(std::size_t idx);
    void push_adjoints(std::size_t idx);
    const Node& node(NodeId id) const;

    std::vector<Node> nodes_;
    std::vector<double> val_;
    std::vector<double> adj_;
    std::vector<std::pair<std::string, NodeId>> inputs_;
};

// Spec-level surface: bind named inputs, evaluate / differentiate.
Tensor evaluate(Graph& g, NodeId root,
                const std::vector<std::pair<std::string, Tensor>>& inputs = {});
std::map<std::string, Tensor, std::less<>> gradient(
    Graph& g, NodeId root, const std::vector<std::pair<std::string, Tensor>>& inputs,
    std::span<const std::string> wrt);

}  // namespace fxtsnet::ad
