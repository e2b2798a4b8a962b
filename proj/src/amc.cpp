#include "imdp/amc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "imdp/errors.hpp"

namespace imdp::amc {

void AbsorbingChain::validate(double tol) const {
  if (Q.rows() != Q.cols()) throw std::invalid_argument("Q must be square");
  if (R.rows() != Q.rows()) throw std::invalid_argument("R must have one row per transient state");
  if (!transient_labels.empty() && static_cast<Eigen::Index>(transient_labels.size()) != Q.rows()) {
    throw std::invalid_argument("transient label count does not match Q");
  }
  if (!absorbing_labels.empty() && static_cast<Eigen::Index>(absorbing_labels.size()) != R.cols()) {
    throw std::invalid_argument("absorbing label count does not match R");
  }
  const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      if (!in_unit(Q(i, j))) throw std::invalid_argument("Q entries must lie in [0, 1]");
      sum += Q(i, j);
    }
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      if (!in_unit(R(i, j))) throw std::invalid_argument("R entries must lie in [0, 1]");
      sum += R(i, j);
    }
    if (std::abs(sum - 1.0) > tol) {
      throw std::invalid_argument("row " + std::to_string(i) + " of [R | Q] sums to " + std::to_string(sum));
    }
  }
}

Matrix fundamental_matrix(const Matrix& Q) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument("Q must be square");
  const Eigen::Index n = Q.rows();
  if (n == 0) return Matrix(0, 0);
  const Matrix A = Matrix::Identity(n, n) - Q;
  const Eigen::PartialPivLU<Matrix> lu(A);
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > 1e-12 * scale)) throw SingularMatrix("I - Q is singular (an absorbing state is unreachable)");
  return lu.inverse();
}

Matrix absorption_probs(const AbsorbingChain& chain) {
  chain.validate();
  return fundamental_matrix(chain.Q) * chain.R;
}

Vector imdp_transition_probs(const std::vector<AbsorbingChain>& chains, int s_i, int d) {
  if (d < 0 || d >= static_cast<int>(chains.size())) {
    throw UnknownAgent("no chain for agent " + std::to_string(d));
  }
  const AbsorbingChain& chain = chains[d];
  if (s_i < 0 || s_i >= chain.transient()) throw std::out_of_range("state index out of range");
  return absorption_probs(chain).row(s_i).transpose();
}

int DecisionTree::add_root(std::string label, bool failure) {
  nodes.clear();
  nodes.push_back({std::move(label), failure, 0, {}});
  return 0;
}

int DecisionTree::add_child(int parent, int agent, std::string label, double prob, bool failure) {
  if (parent < 0 || parent >= static_cast<int>(nodes.size())) throw std::out_of_range("no such parent node");
  const int idx = static_cast<int>(nodes.size());
  nodes.push_back({std::move(label), failure, nodes[parent].depth + 1, {}});
  auto& branches = nodes[parent].branches;
  auto it = std::find_if(branches.begin(), branches.end(), [&](const Branch& b) { return b.agent == agent; });
  if (it == branches.end()) {
    branches.push_back({agent, {}});
    it = branches.end() - 1;
  }
  it->children.push_back({idx, prob});
  return idx;
}

int DecisionTree::depth() const {
  int d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

void DecisionTree::validate(int max_depth) const {
  if (depth() > max_depth) throw std::invalid_argument("tree deeper than the horizon bound");
  for (const auto& n : nodes) {
    for (const auto& b : n.branches) {
      double mass = 0.0;
      for (const auto& c : b.children) {
        if (!(c.prob >= 0.0 && c.prob <= 1.0)) throw std::invalid_argument("edge probability outside [0, 1]");
        mass += c.prob;
      }
      if (mass > 1.0 + 1e-9) throw std::invalid_argument("outcome mass of a branch exceeds 1");
    }
  }
}

double path_failure_probability(const DecisionTree& tree, const TreePolicy& policy) {
  if (tree.nodes.empty()) return 0.0;
  struct Frame {
    int node;
    double prob;
  };
  std::vector<Frame> stack{{0, 1.0}};
  double total = 0.0;
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes[f.node];
    if (node.failure) {
      total += f.prob;
      continue;
    }
    for (const auto& b : node.branches) {
      const double pd = policy(f.node, b.agent);
      if (pd == 0.0) continue;
      for (const auto& c : b.children) stack.push_back({c.node, f.prob * pd * c.prob});
    }
  }
  return total;
}

TreePolicy EmpiricalTree::as_policy() const {
  return [this](int node, int agent) {
    const auto& row = policy.at(node);
    return agent >= 0 && agent < static_cast<int>(row.size()) ? row[agent] : 0.0;
  };
}

EmpiricalTree empirical_tree(const std::vector<StateTrace>& traces, int agents, int max_depth) {
  if (traces.empty()) throw EmptyTraceSet("cannot build a tree from no traces");
  if (agents <= 0) throw std::invalid_argument("agent count must be positive");

  // Node identity is the full (state, agent) prefix; children are keyed by
  // (parent, agent, next state).
  struct Counts {
    std::vector<int> by_agent;
    std::map<std::pair<int, std::string>, int> next;  // (agent, state) -> node
    std::map<std::pair<int, std::string>, int> hits;
  };
  EmpiricalTree out;
  std::vector<Counts> counts;
  out.tree.add_root(traces.front().states.empty() ? "" : traces.front().states.front());
  counts.push_back({std::vector<int>(agents, 0), {}, {}});

  for (const auto& tr : traces) {
    if (tr.states.size() != tr.agents.size() + 1) {
      throw std::invalid_argument("trace needs one more state than decisions");
    }
    int node = 0;
    const int steps = std::min<int>(static_cast<int>(tr.agents.size()), max_depth);
    for (int k = 0; k < steps; ++k) {
      const int a = tr.agents[k];
      if (a < 0 || a >= agents) throw UnknownAgent("trace uses agent " + std::to_string(a));
      ++counts[node].by_agent[a];
      const auto key = std::pair{a, tr.states[k + 1]};
      auto it = counts[node].next.find(key);
      int child;
      if (it == counts[node].next.end()) {
        const bool last = k + 1 == static_cast<int>(tr.agents.size());
        child = out.tree.add_child(node, a, tr.states[k + 1], 0.0, last && tr.failure);
        counts[node].next.emplace(key, child);
        counts.push_back({std::vector<int>(agents, 0), {}, {}});
      } else {
        child = it->second;
      }
      ++counts[node].hits[key];
      node = child;
    }
  }

  out.policy.assign(out.tree.nodes.size(), std::vector<double>(agents, 0.0));
  for (std::size_t n = 0; n < out.tree.nodes.size(); ++n) {
    int total = 0;
    for (int c : counts[n].by_agent) total += c;
    for (int a = 0; a < agents; ++a) {
      out.policy[n][a] = total > 0 ? static_cast<double>(counts[n].by_agent[a]) / total : 0.0;
    }
    for (auto& b : out.tree.nodes[n].branches) {
      for (auto& c : b.children) {
        const auto key = std::pair{b.agent, out.tree.nodes[c.node].label};
        c.prob = static_cast<double>(counts[n].hits.at(key)) / counts[n].by_agent[b.agent];
      }
    }
  }
  return out;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows_if_empty) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(rows_if_empty, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols) throw std::invalid_argument("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const AbsorbingChain& chain) {
  return {{"Q", matrix_to_json(chain.Q)},
          {"R", matrix_to_json(chain.R)},
          {"transient_labels", chain.transient_labels},
          {"absorbing_labels", chain.absorbing_labels}};
}

AbsorbingChain chain_from_json(const nlohmann::json& j) {
  AbsorbingChain c;
  c.Q = matrix_from_json(j.at("Q"), 0);
  c.R = matrix_from_json(j.at("R"), c.Q.rows());
  c.transient_labels = j.value("transient_labels", std::vector<std::string>{});
  c.absorbing_labels = j.value("absorbing_labels", std::vector<std::string>{});
  c.validate();
  return c;
}

nlohmann::json to_json(const DecisionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes) {
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& b : n.branches) {
      nlohmann::json children = nlohmann::json::array();
      for (const auto& c : b.children) children.push_back({{"node", c.node}, {"prob", c.prob}});
      branches.push_back({{"agent", b.agent}, {"children", children}});
    }
    nodes.push_back({{"label", n.label}, {"failure", n.failure}, {"depth", n.depth}, {"branches", branches}});
  }
  return {{"nodes", nodes}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  for (const auto& n : j.at("nodes")) {
    DecisionTree::Node node{n.at("label").get<std::string>(), n.value("failure", false), n.value("depth", 0), {}};
    for (const auto& b : n.at("branches")) {
      DecisionTree::Branch br{b.at("agent").get<int>(), {}};
      for (const auto& c : b.at("children")) br.children.push_back({c.at("node").get<int>(), c.at("prob").get<double>()});
      node.branches.push_back(std::move(br));
    }
    t.nodes.push_back(std::move(node));
  }
  const int n = static_cast<int>(t.nodes.size());
  for (const auto& node : t.nodes) {
    for (const auto& b : node.branches) {
      for (const auto& c : b.children) {
        if (c.node <= 0 || c.node >= n) throw std::invalid_argument("tree child index out of range");
      }
    }
  }
  return t;
}

}  // namespace imdp::amc
