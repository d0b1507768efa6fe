#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pomirl/model.hpp"

namespace pomirl {

// Memoryless observation-based stochastic policy: |Z| x |A|, rows sum to 1.
struct Policy {
    Eigen::MatrixXd sigma;
};

Policy uniform_policy(const Pomdp& p);
std::vector<Violation> validate_policy(const Pomdp& p, const Policy& sigma);

// Discounted state and state-action visitation counts.
struct VisitationCounts {
    Eigen::VectorXd mu; // over S
    Eigen::MatrixXd nu; // S x A
};

// Undiscounted counterparts used for specification constraints. target_mass
// is the probability of reaching the target set. `regularized` flags that the
// strict undiscounted system was singular and a discount of 1-eps was used.
struct SpecVisitation {
    Eigen::VectorXd mu_sp;
    Eigen::MatrixXd nu_sp;
    double target_mass = 0.0;
    bool regularized = false;
};

// State-conditional action probabilities q(s,a) = sum_z O(z|s) sigma(z,a).
Eigen::MatrixXd state_action_policy(const Pomdp& p, const Policy& sigma);

// Solves mu(s) = mu0(s) + gamma * sum_{s',a} P(s|s',a) nu(s',a) with
// nu(s,a) = mu(s) q(s,a); residual below 1e-8 or throws SolverError.
VisitationCounts bellman_flow_solve(const Pomdp& p, const Policy& sigma);

// Counts below this are treated as exact zeros before any log.
constexpr double kCountFloor = 1e-12;

double causal_entropy(const VisitationCounts& vc);

// Entropy plus linear reward term: sum -nu log(nu/mu) + theta^T phi . nu,
// with the 0 log 0 = 0 convention.
double realized_cost(const VisitationCounts& vc, const RewardWeights& theta,
                     const FeatureBasis& phi);

// R^phi_sigma = sum_{s,a} phi(s,a) nu(s,a).
Eigen::VectorXd discounted_feature_expectation(const VisitationCounts& vc,
                                               const FeatureBasis& phi);

// Undiscounted flow restricted to transitions leaving non-target states.
// Target states must be absorbing as a set (spec compilation guarantees it).
SpecVisitation spec_flow_solve(const Pomdp& p, const Policy& sigma,
                               const std::vector<int>& target);

// min{0, (target_mass - lambda) * beta_sp}: zero iff the constraint is met.
double spec_penalty(const SpecVisitation& sv, double lambda, double beta_sp);

} // namespace pomirl
