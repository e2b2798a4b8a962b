#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace imdp::amc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Canonical-form absorbing chain: Q holds transient -> transient and R
/// transient -> absorbing single-step probabilities.
struct AbsorbingChain {
  Matrix Q;
  Matrix R;
  std::vector<std::string> transient_labels;
  std::vector<std::string> absorbing_labels;

  int transient() const { return static_cast<int>(Q.rows()); }
  int absorbing() const { return static_cast<int>(R.cols()); }

  /// Throws std::invalid_argument on shape mismatch, entries outside [0, 1]
  /// or rows of [R | Q] that do not sum to 1 within `tol`.
  void validate(double tol = 1e-9) const;
};

/// N = (I - Q)^-1 by LU decomposition with partial pivoting. Throws
/// SingularMatrix when I - Q is numerically singular.
Matrix fundamental_matrix(const Matrix& Q);

/// B = N R.
Matrix absorption_probs(const AbsorbingChain& chain);

/// Row `s_i` of B for agent `d`'s chain. Throws UnknownAgent when `d` is out
/// of range and std::out_of_range for a bad state index.
Vector imdp_transition_probs(const std::vector<AbsorbingChain>& chains, int s_i, int d);

/// Alternating tree of intervention states and delegation branches. Node 0
/// is the root; each branch is one agent choice with outcome probabilities.
struct DecisionTree {
  struct Child {
    int node;
    double prob;
  };
  struct Branch {
    int agent;
    std::vector<Child> children;
  };
  struct Node {
    std::string label;
    bool failure = false;
    int depth = 0;
    std::vector<Branch> branches;
  };

  std::vector<Node> nodes;

  int add_root(std::string label, bool failure = false);
  /// Adds a child state reached with probability `prob` after delegating to
  /// `agent` at `parent`; returns the new node index.
  int add_child(int parent, int agent, std::string label, double prob, bool failure = false);
  int depth() const;
  /// Throws std::invalid_argument when branch outcome masses exceed 1 or the
  /// depth exceeds `max_depth`.
  void validate(int max_depth) const;
};

/// pi_m(d | node).
using TreePolicy = std::function<double(int node, int agent)>;

/// Sum over root-to-failure-leaf paths of the product of delegation and
/// absorption probabilities along the path. Enumerates paths explicitly.
double path_failure_probability(const DecisionTree& tree, const TreePolicy& policy);

/// One rollout at intervention-state granularity: states[k] is the state at
/// the k-th decision, agents[k] the agent chosen there; the final state is
/// terminal.
struct StateTrace {
  std::vector<std::string> states;
  std::vector<int> agents;
  bool failure = false;
};

struct EmpiricalTree {
  DecisionTree tree;
  /// Empirical delegation frequencies per node and agent.
  std::vector<std::vector<double>> policy;

  TreePolicy as_policy() const;
};

/// Frequency-counted tree over trace prefixes, truncated at `max_depth`.
/// Throws EmptyTraceSet on no traces.
EmpiricalTree empirical_tree(const std::vector<StateTrace>& traces, int agents, int max_depth);

nlohmann::json to_json(const AbsorbingChain& chain);
AbsorbingChain chain_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace imdp::amc
