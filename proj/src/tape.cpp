#include "srmoe/tape.hpp"

#include <stdexcept>

namespace srmoe {

NodeId Tape::constant(Mat value) {
    return node(std::move(value), nullptr);
}

NodeId Tape::leaf(Param& p) {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    Param* pp = &p;
    Tape* t = this;
    nodes_.push_back(Node{p.value, zeros_like(p.value),
                          [t, id, pp]() { pp->grad.add_scaled(t->grad(id), 1.0); }});
    return id;
}

NodeId Tape::node(Mat value, std::function<void()> back) {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    Mat g = zeros_like(value);
    nodes_.push_back(Node{std::move(value), std::move(g), std::move(back)});
    return id;
}

void Tape::backward(NodeId root) {
    if (root < 0 || root >= size()) {
        throw std::invalid_argument("Tape::backward: root id out of range");
    }
    Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.rows != 1 || r.value.cols != 1) {
        throw std::invalid_argument("Tape::backward: root must be a 1x1 scalar");
    }
    for (Node& n : nodes_) n.grad.fill(0.0);
    r.grad.at(0, 0) = 1.0;
    for (int i = root; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.back) n.back();
    }
}

void Tape::clear() {
    nodes_.clear();
}

}  // namespace srmoe
