#pragma once

// Reverse-mode autodiff on a linear tape. Every operation appends a node
// holding its output value and a closure that routes the node's gradient to
// the gradients of its inputs. backward() seeds a 1x1 root with 1.0 and
// replays the closures in reverse creation order.
//
// Closures must address nodes through the tape by id, never by reference:
// the node vector reallocates as it grows.

#include <functional>
#include <vector>

#include "srmoe/mat.hpp"
#include "srmoe/param.hpp"

namespace srmoe {

using NodeId = int;

class Tape {
public:
    // Appends a node with no backward action (a constant input).
    NodeId constant(Mat value);

    // Appends a node mirroring a parameter's current value. During backward
    // the node's gradient is added into p.grad, so parameter gradients
    // accumulate across calls until zero_grad().
    NodeId leaf(Param& p);

    // Appends a node whose gradient flow is defined by back, which runs
    // during the reverse sweep once this node's grad is final.
    NodeId node(Mat value, std::function<void()> back);

    const Mat& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Mat& grad(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const Mat& grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    int size() const { return static_cast<int>(nodes_.size()); }

    // Zeroes every node gradient, seeds d(root)/d(root) = 1 (root must be
    // 1x1), and replays backward closures from root down to the first node.
    void backward(NodeId root);

    // Drops all nodes. Parameter gradients are untouched.
    void clear();

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void()> back;
    };
    std::vector<Node> nodes_;
};

}  // namespace srmoe
