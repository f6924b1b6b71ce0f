#include "mgml/autograd.hpp"

#include <algorithm>
#include <unordered_set>

namespace mgml {

void backward(const VarPtr& root) {
    if (!root) throw UsageError("backward: null root");
    if (root->value.shape() != Shape{1, 1, 1, 1}) {
        throw UsageError("backward: root must be scalar, got shape " +
                         root->value.shape().str());
    }
    if (root->consumed()) {
        throw UsageError("backward: trace already consumed; rebuild the forward pass");
    }
    root->mark_consumed();
    if (!root->requires_grad) return;

    // Iterative post-order DFS; children are visited in recorded parent
    // order so the accumulation order is fixed.
    std::vector<Variable*> order;
    std::unordered_set<Variable*> seen;
    std::vector<std::pair<Variable*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Variable* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Variable* v : order) v->value.ensure_grad();
    root->value.grad()[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Variable* v = *it;
        if (v->backward_fn) v->backward_fn(*v);
    }
}

} // namespace mgml
