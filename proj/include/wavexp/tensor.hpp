#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wavexp/common.hpp"

namespace wavexp {

class Tensor;

/// Given the cotangent of this node's output, produce the cotangents of its
/// parents (same order as Node::parents). `needs[i]` tells the vjp whether
/// parent i's gradient will actually be consumed; expensive branches (weight
/// grads, extra GEMMs) should return a default-constructed Tensor when not
/// needed. Vjp bodies are written in terms of public tensor ops, so running
/// them with recording enabled yields a differentiable graph — this is what
/// makes second-order terms (gradient penalties) work.
using VjpFn =
    std::function<std::vector<Tensor>(const Tensor& gout, const std::vector<char>& needs)>;

struct Node {
    Shape shape;
    std::vector<float> data;
    bool leaf = true;
    bool requires_grad = false;
    std::shared_ptr<Node> grad;  // leaves only; allocated iff requires_grad
    std::vector<std::shared_ptr<Node>> parents;
    VjpFn vjp;
    const char* op = "";
    uint64_t id = 0;

    int64_t size() const { return static_cast<int64_t>(data.size()); }
};

/// Whether newly created ops record history. Scoped off by NoGradGuard.
bool grad_recording_enabled();

class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool saved_;
};

/// Value-semantic handle to a dense float32 array, optionally carrying
/// autograd history. Copying a Tensor copies the handle, not the storage.
class Tensor {
  public:
    Tensor() = default;

    static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, float value, bool requires_grad = false);
    static Tensor scalar(float value);

    /// Interior (non-leaf) node produced by an op. Respects grad recording:
    /// with recording off the result is detached from `parents`.
    static Tensor op_result(Shape shape, std::vector<float> data, const char* op,
                            std::vector<Tensor> parents, VjpFn vjp);

    /// Wrap an existing node (engine internal; used for .grad handles).
    static Tensor adopt(std::shared_ptr<Node> node);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node().shape; }
    int64_t size() const { return node().size(); }
    int64_t dim(size_t i) const { return node().shape.at(i); }
    size_t rank() const { return node().shape.size(); }

    const float* data() const { return node().data.data(); }
    const std::vector<float>& vec() const { return node().data; }
    /// Direct mutation is reserved for leaves (initialization, optimizer
    /// updates); mutating an interior node would corrupt recorded history.
    float* mutable_data();

    bool is_leaf() const { return node().leaf; }
    bool requires_grad() const { return node().requires_grad; }
    void set_requires_grad(bool value);

    /// Leaf gradient accumulator (undefined handle when not a gradient leaf).
    Tensor grad() const;
    void zero_grad();
    /// In-place += into the leaf gradient accumulator. Not recorded.
    void accumulate_grad(const Tensor& g);

    float item() const;

    std::shared_ptr<Node> ptr() const { return node_; }
    Node* raw() const { return node_.get(); }

    friend bool operator==(const Tensor& a, const Tensor& b) { return a.node_ == b.node_; }

  private:
    Node& node() const {
        check(node_ != nullptr, "use of undefined tensor");
        return *node_;
    }
    std::shared_ptr<Node> node_;
};

/// Trainable tensor with a unique model path such as "gen.enc0.conv.weight".
struct Parameter {
    std::string name;
    Tensor tensor;
};

/// Reverse-mode pass from a scalar root. Accumulates (+=) into the .grad of
/// every reachable leaf that requires grad; repeated calls keep accumulating.
void backward(const Tensor& root);

/// Gradient of a scalar root with respect to one leaf `x`, without touching
/// any leaf's .grad. With create_graph the returned tensor carries history,
/// so it can be differentiated again. Throws if root does not depend on x.
Tensor grad_wrt(const Tensor& root, const Tensor& x, bool create_graph);

}  // namespace wavexp
