#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mgml/tensor.hpp"

namespace mgml {

class Variable;
using VarPtr = std::shared_ptr<Variable>;

// One node of the dynamically recorded computation trace. The trace is
// single-use: backward() walks it once, in a fixed reverse-topological
// order, and refuses to walk the same root twice.
class Variable {
public:
    Tensor value;
    bool requires_grad = false;

    std::vector<VarPtr> parents;
    // Reads this node's grad buffer and accumulates into the parents'.
    std::function<void(Variable&)> backward_fn;

    static VarPtr leaf(Tensor t, bool requires_grad = false) {
        auto v = std::make_shared<Variable>();
        v->value = std::move(t);
        v->requires_grad = requires_grad;
        return v;
    }

    static VarPtr op(Tensor out, std::vector<VarPtr> parents,
                     std::function<void(Variable&)> backward_fn) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || p->requires_grad;
        auto v = std::make_shared<Variable>();
        v->value = std::move(out);
        if (needs) {
            v->requires_grad = true;
            v->parents = std::move(parents);
            v->backward_fn = std::move(backward_fn);
        }
        return v;
    }

    bool consumed() const { return consumed_; }
    void mark_consumed() { consumed_ = true; }

private:
    bool consumed_ = false;
};

// Reverse pass from a scalar root: seeds d(root)/d(root) = 1 and
// accumulates into every reachable parameter's grad buffer.
// Deterministic: the traversal order is a pure function of graph shape.
void backward(const VarPtr& root);

} // namespace mgml
