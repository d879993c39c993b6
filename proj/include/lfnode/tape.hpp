#pragma once

#include "lfnode/core.hpp"
#include "lfnode/vecfield.hpp"

#include <vector>

namespace lfnode {

/// Minimal reverse-mode tape over vector-valued nodes.
///
/// The node vocabulary is fixed (leaf, constant, slice, add, scale, matvec,
/// hadamard, tanh, dot, square); it only has to express the tanh/linear fields,
/// the readouts and the least-squares loss. Nodes are appended in topological
/// order, so a single backward sweep over the node list is a valid reverse pass.
class Tape {
 public:
  using NodeId = std::size_t;

  NodeId leaf(const Vec& value);
  NodeId constant(const Vec& value);
  NodeId slice(NodeId a, Eigen::Index offset, Eigen::Index length);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  // `matrix` holds a rows x cols matrix packed row-major.
  NodeId matvec(NodeId matrix, Eigen::Index rows, Eigen::Index cols, NodeId vec);
  NodeId hadamard(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId dot(NodeId a, NodeId b);  // result has length 1
  NodeId square(NodeId a);         // elementwise

  const Vec& value(NodeId id) const { return nodes_.at(id).value; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(output)/d(output) = 1 for a length-1 output and returns the adjoint
  // of every node.
  std::vector<Vec> backward(NodeId output) const;

 private:
  enum class Op { leaf, constant, slice, add, scale, matvec, hadamard, tanh, dot, square };

  struct Node {
    explicit Node(Op o, NodeId lhs = 0, NodeId rhs = 0) : op(o), a(lhs), b(rhs) {}

    Op op;
    NodeId a = 0;
    NodeId b = 0;
    double factor = 0.0;
    Eigen::Index offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    Vec value;
  };

  NodeId push(Node node);

  std::vector<Node> nodes_;
};

// Records f(z, theta) for the tanh and linear kinds; custom fields throw.
Tape::NodeId record_field(Tape& tape, const FieldModel& field, Tape::NodeId z, Tape::NodeId theta);

Tape::NodeId record_readout(Tape& tape, const Readout& readout, Tape::NodeId z);

}  // namespace lfnode
