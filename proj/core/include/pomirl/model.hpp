#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pomirl/errors.hpp"

namespace pomirl {

// Sparse probability row: (index, probability) pairs, indices strictly increasing.
using SparseDist = std::vector<std::pair<int, double>>;

constexpr double kProbTol = 1e-9;

// Default spec attached to a generated model, kept as text so the model
// module does not depend on the spec compiler. Parsed by spec.hpp on use.
struct SpecText {
    std::string formula; // e.g. "G !bad", "F goal", "!bad U goal"
    double lambda = 1.0;
};

// Finite POMDP with sparse kernels. Immutable by convention after
// construction/parsing; all solver modules treat it as read-only.
struct Pomdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> observations;

    // transition[s * num_actions() + a]; an empty row means the action is
    // not enabled in s, which validate() reports as a violation.
    std::vector<SparseDist> transition;
    // observation_fn[s]: distribution over observations.
    std::vector<SparseDist> observation_fn;

    Eigen::VectorXd initial; // dense over states
    double discount = 0.0;
    std::map<std::string, std::vector<int>> labels;

    // Optional payload emitted by the benchmark generators.
    std::optional<SpecText> default_spec;
    std::optional<Eigen::VectorXd> theta_true;

    int num_states() const { return static_cast<int>(states.size()); }
    int num_actions() const { return static_cast<int>(actions.size()); }
    int num_observations() const { return static_cast<int>(observations.size()); }

    const SparseDist& trans(int s, int a) const { return transition[s * num_actions() + a]; }
    SparseDist& trans(int s, int a) { return transition[s * num_actions() + a]; }

    int state_index(const std::string& name) const;
    int action_index(const std::string& name) const;
    int observation_index(const std::string& name) const;

    // True iff every enabled action in s points back to s with probability 1.
    bool is_absorbing(int s) const;

    const std::vector<int>& label_states(const std::string& name) const;
};

// The d basis functions phi(s, a), stored densely as an (S*A) x d matrix.
struct FeatureBasis {
    int d = 0;
    Eigen::MatrixXd values; // row s*A+a holds phi(s,a)

    Eigen::RowVectorXd phi(int s, int a, int num_actions) const {
        return values.row(s * num_actions + a);
    }
};

struct RewardWeights {
    Eigen::VectorXd theta;
};

struct Belief {
    Eigen::VectorXd probabilities;
};

struct ModelDocument {
    Pomdp pomdp;
    std::optional<FeatureBasis> features;
};

struct Violation {
    std::string where;
    std::string what;
};

// Parses and validates a model document (JSON text). Probability rows are
// checked to sum to 1 within 1e-9 and then renormalized exactly. Throws
// ParseError on malformed JSON or schema violations, ValidationError on the
// first invariant violation.
ModelDocument parse_model(const std::string& text);
ModelDocument load_model(const std::string& path);

std::string serialize_model(const ModelDocument& doc);
void save_model(const ModelDocument& doc, const std::string& path);

// Reports every invariant violation; empty result iff the model is valid.
std::vector<Violation> validate(const Pomdp& p);
std::vector<Violation> validate_features(const Pomdp& p, const FeatureBasis& f);

// One Bayes filter step: b'(s') ~ O(z|s') * sum_s P(s'|s,a) b(s), normalized.
// Throws InconsistentTraceError when the normalizer is zero.
Belief belief_update(const Pomdp& p, const Belief& b, int action, int observation);

} // namespace pomirl
