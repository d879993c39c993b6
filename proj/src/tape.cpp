#include "lfnode/tape.hpp"

namespace lfnode {

Tape::NodeId Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Tape::NodeId Tape::leaf(const Vec& value) {
  Node n(Op::leaf);
  n.value = value;
  return push(std::move(n));
}

Tape::NodeId Tape::constant(const Vec& value) {
  Node n(Op::constant);
  n.value = value;
  return push(std::move(n));
}

Tape::NodeId Tape::slice(NodeId a, Eigen::Index offset, Eigen::Index length) {
  require(offset >= 0 && length >= 0 && offset + length <= value(a).size(), "tape: slice out of range");
  Node n(Op::slice, a);
  n.offset = offset;
  n.value = value(a).segment(offset, length);
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  require(value(a).size() == value(b).size(), "tape: add size mismatch");
  Node n(Op::add, a, b);
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
  Node n(Op::scale, a);
  n.factor = factor;
  n.value = factor * value(a);
  return push(std::move(n));
}

Tape::NodeId Tape::matvec(NodeId matrix, Eigen::Index rows, Eigen::Index cols, NodeId vec) {
  require(value(matrix).size() == rows * cols && value(vec).size() == cols, "tape: matvec size mismatch");
  Node n(Op::matvec, matrix, vec);
  n.rows = rows;
  n.cols = cols;
  n.value = Eigen::Map<const RowGrid>(value(matrix).data(), rows, cols) * value(vec);
  return push(std::move(n));
}

Tape::NodeId Tape::hadamard(NodeId a, NodeId b) {
  require(value(a).size() == value(b).size(), "tape: hadamard size mismatch");
  Node n(Op::hadamard, a, b);
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Tape::NodeId Tape::tanh(NodeId a) {
  Node n(Op::tanh, a);
  n.value = value(a).array().tanh();
  return push(std::move(n));
}

Tape::NodeId Tape::dot(NodeId a, NodeId b) {
  require(value(a).size() == value(b).size(), "tape: dot size mismatch");
  Node n(Op::dot, a, b);
  n.value = Vec::Constant(1, value(a).dot(value(b)));
  return push(std::move(n));
}

Tape::NodeId Tape::square(NodeId a) {
  Node n(Op::square, a);
  n.value = value(a).array().square();
  return push(std::move(n));
}

std::vector<Vec> Tape::backward(NodeId output) const {
  require(output < nodes_.size() && value(output).size() == 1, "tape: backward needs a scalar output");
  std::vector<Vec> adj(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) adj[i] = Vec::Zero(nodes_[i].value.size());
  adj[output][0] = 1.0;

  for (std::size_t i = output + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    const Vec& g = adj[i];
    switch (n.op) {
      case Op::leaf:
      case Op::constant:
        break;
      case Op::slice:
        adj[n.a].segment(n.offset, g.size()) += g;
        break;
      case Op::add:
        adj[n.a] += g;
        adj[n.b] += g;
        break;
      case Op::scale:
        adj[n.a] += n.factor * g;
        break;
      case Op::matvec: {
        Eigen::Map<const RowGrid> m(nodes_[n.a].value.data(), n.rows, n.cols);
        Eigen::Map<RowGrid> dm(adj[n.a].data(), n.rows, n.cols);
        dm += g * nodes_[n.b].value.transpose();
        adj[n.b] += m.transpose() * g;
        break;
      }
      case Op::hadamard:
        adj[n.a] += g.cwiseProduct(nodes_[n.b].value);
        adj[n.b] += g.cwiseProduct(nodes_[n.a].value);
        break;
      case Op::tanh:
        adj[n.a] += (g.array() * (1.0 - n.value.array().square())).matrix();
        break;
      case Op::dot:
        adj[n.a] += g[0] * nodes_[n.b].value;
        adj[n.b] += g[0] * nodes_[n.a].value;
        break;
      case Op::square:
        adj[n.a] += (2.0 * g.array() * nodes_[n.a].value.array()).matrix();
        break;
    }
  }
  return adj;
}

Tape::NodeId record_field(Tape& tape, const FieldModel& field, Tape::NodeId z, Tape::NodeId theta) {
  switch (field.kind()) {
    case FieldKind::linear:
      return tape.hadamard(theta, z);
    case FieldKind::tanh: {
      const auto d = static_cast<Eigen::Index>(field.state_dim());
      auto sigma = tape.slice(theta, static_cast<Eigen::Index>(field.sigma_offset()), d);
      auto w = tape.slice(theta, static_cast<Eigen::Index>(field.w_offset()), d * d);
      auto b = tape.slice(theta, static_cast<Eigen::Index>(field.b_offset()), d);
      auto pre = tape.add(tape.matvec(w, d, d, z), b);
      return tape.hadamard(sigma, tape.tanh(pre));
    }
    case FieldKind::custom:
      break;
  }
  throw ArgumentError("tape: custom fields cannot be recorded");
}

Tape::NodeId record_readout(Tape& tape, const Readout& readout, Tape::NodeId z) {
  auto s = tape.dot(tape.constant(readout.coeffs), z);
  return readout.kind == ReadoutKind::linear ? s : tape.tanh(s);
}

}  // namespace lfnode
