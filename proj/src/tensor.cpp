#include "wavexp/tensor.hpp"

#include <atomic>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "wavexp/ops.hpp"

namespace wavexp {

namespace {

thread_local bool g_recording = true;
std::atomic<uint64_t> g_next_id{1};

std::shared_ptr<Node> make_node(Shape shape, std::vector<float> data) {
    auto n = std::make_shared<Node>();
    check(static_cast<int64_t>(data.size()) == numel(shape), "node data size ",
          data.size(), " does not match shape ", shape_str(shape));
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
    return n;
}

// Post-order over the parent DAG restricted to `follow`; every parent of a
// node precedes it, so the reversed order is a valid backward schedule.
// Iterative: graphs get deep (a training step unrolls hundreds of ops).
std::vector<std::shared_ptr<Node>> topo_collect(const std::shared_ptr<Node>& root,
                                                const std::function<bool(Node*)>& follow) {
    std::vector<std::shared_ptr<Node>> order;
    if (!follow(root.get())) return order;
    struct Frame {
        std::shared_ptr<Node> node;
        size_t next = 0;
    };
    std::unordered_set<Node*> visited;
    std::vector<Frame> stack;
    stack.push_back({root});
    visited.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.node->parents.size()) {
            std::shared_ptr<Node> p = f.node->parents[f.next++];
            if (p && !visited.count(p.get()) && follow(p.get())) {
                visited.insert(p.get());
                stack.push_back({std::move(p)});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    return order;
}

// Shared reverse sweep over a precomputed schedule. `follow` tells which
// parents participate; vjps receive that as `needs` so dead branches (e.g.
// weight grads when only an input gradient is wanted) can be skipped.
void reverse_sweep(const Tensor& root, const std::vector<std::shared_ptr<Node>>& order,
                   const std::function<bool(Node*)>& follow,
                   std::unordered_map<Node*, Tensor>& cot) {
    cot[root.raw()] = Tensor::full(root.shape(), 1.0f);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = it->get();
        auto self = cot.find(n);
        if (self == cot.end() || n->leaf) continue;
        const Tensor gout = self->second;
        std::vector<char> needs(n->parents.size(), 0);
        for (size_t i = 0; i < n->parents.size(); ++i)
            needs[i] = n->parents[i] && follow(n->parents[i].get()) ? 1 : 0;
        std::vector<Tensor> gs = n->vjp(gout, needs);
        check(gs.size() == n->parents.size(), "vjp of ", n->op, " returned ", gs.size(),
              " gradients for ", n->parents.size(), " parents");
        for (size_t i = 0; i < gs.size(); ++i) {
            if (!needs[i] || !gs[i].defined()) continue;
            Node* p = n->parents[i].get();
            check(gs[i].shape() == p->shape, "vjp of ", n->op, " gradient ", i, " shape ",
                  shape_str(gs[i].shape()), " vs parent ", shape_str(p->shape));
            auto slot = cot.find(p);
            if (slot == cot.end())
                cot.emplace(p, gs[i]);
            else
                slot->second = add(slot->second, gs[i]);
        }
    }
}

}  // namespace

bool grad_recording_enabled() { return g_recording; }

NoGradGuard::NoGradGuard() : saved_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = saved_; }

Tensor Tensor::adopt(std::shared_ptr<Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
    auto n = make_node(std::move(shape), std::move(data));
    n->requires_grad = requires_grad;
    return adopt(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::vector<float> d(static_cast<size_t>(numel(shape)), 0.0f);
    return from_data(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
    std::vector<float> d(static_cast<size_t>(numel(shape)), value);
    return from_data(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::scalar(float value) { return from_data({1}, {value}); }

Tensor Tensor::op_result(Shape shape, std::vector<float> data, const char* op,
                         std::vector<Tensor> parents, VjpFn vjp) {
    bool track = false;
    if (g_recording) {
        for (const Tensor& p : parents)
            if (p.defined() && p.requires_grad()) track = true;
    }
    auto n = make_node(std::move(shape), std::move(data));
    n->op = op;
    if (track) {
        n->leaf = false;
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (const Tensor& p : parents) n->parents.push_back(p.ptr());
        n->vjp = std::move(vjp);
    }
    return adopt(std::move(n));
}

float* Tensor::mutable_data() {
    check(node().leaf, "mutable_data on interior node (op ", node().op, ")");
    return node().data.data();
}

void Tensor::set_requires_grad(bool value) {
    check(node().leaf, "set_requires_grad on interior node");
    node().requires_grad = value;
}

Tensor Tensor::grad() const {
    if (!node().grad) return Tensor();
    return adopt(node().grad);
}

void Tensor::zero_grad() {
    if (node().grad) std::fill(node().grad->data.begin(), node().grad->data.end(), 0.0f);
}

void Tensor::accumulate_grad(const Tensor& g) {
    Node& n = node();
    check(n.leaf && n.requires_grad, "accumulate_grad on non-gradient tensor");
    check(g.defined() && g.shape() == n.shape, "gradient shape ",
          g.defined() ? shape_str(g.shape()) : "<undef>", " vs value ", shape_str(n.shape));
    if (!n.grad) n.grad = make_node(n.shape, std::vector<float>(n.data.size(), 0.0f));
    float* acc = n.grad->data.data();
    const float* src = g.data();
    for (int64_t i = 0; i < n.size(); ++i) acc[i] += src[i];
}

float Tensor::item() const {
    check(size() == 1, "item() on tensor of shape ", shape_str(shape()));
    return node().data[0];
}

void backward(const Tensor& root) {
    check(root.defined() && root.size() == 1, "backward root must be a defined scalar");
    check(root.requires_grad(), "backward root does not require grad");
    NoGradGuard ng;
    auto follow = [](Node* n) { return n->requires_grad; };
    auto order = topo_collect(root.ptr(), follow);
    std::unordered_map<Node*, Tensor> cot;
    reverse_sweep(root, order, follow, cot);
    for (const auto& sp : order) {
        if (!sp->leaf || !sp->requires_grad) continue;
        auto it = cot.find(sp.get());
        if (it != cot.end()) Tensor::adopt(sp).accumulate_grad(it->second);
    }
}

Tensor grad_wrt(const Tensor& root, const Tensor& x, bool create_graph) {
    check(root.defined() && root.size() == 1, "grad_wrt root must be a defined scalar");
    check(x.defined(), "grad_wrt target is undefined");

    // depends[n]: x reachable from n through recorded parents.
    std::unordered_map<Node*, char> depends;
    {
        struct Frame {
            Node* node;
            size_t next = 0;
        };
        std::vector<Frame> stack;
        auto push = [&](Node* n) {
            if (depends.count(n)) return;
            if (n == x.raw()) {
                depends[n] = 1;
            } else if (n->parents.empty()) {
                depends[n] = 0;
            } else {
                stack.push_back({n});
                depends[n] = 0;  // provisional; finalized when the frame pops
            }
        };
        push(root.raw());
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < f.node->parents.size()) {
                Node* p = f.node->parents[f.next++].get();
                if (p) push(p);
            } else {
                char d = 0;
                for (const auto& p : f.node->parents)
                    if (p && depends[p.get()]) d = 1;
                depends[f.node] = d;
                stack.pop_back();
            }
        }
    }
    check(depends[root.raw()] == 1, "grad_wrt: root does not depend on target");

    std::optional<NoGradGuard> guard;
    if (!create_graph) guard.emplace();
    auto follow = [&depends](Node* n) {
        auto it = depends.find(n);
        return it != depends.end() && it->second != 0;
    };
    auto order = topo_collect(root.ptr(), follow);
    std::unordered_map<Node*, Tensor> cot;
    reverse_sweep(root, order, follow, cot);
    auto it = cot.find(x.raw());
    check(it != cot.end(), "grad_wrt: no gradient reached target");
    return it->second;
}

}  // namespace wavexp
