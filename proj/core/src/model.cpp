#include "pomirl/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pomirl {

using json = nlohmann::ordered_json;

namespace {

int lookup(const std::vector<std::string>& names, const std::string& name,
           const char* kind, const std::string& where) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw ParseError("unknown " + std::string(kind) + " '" + name + "' in " + where);
    }
    return static_cast<int>(it - names.begin());
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) { known = true; break; }
        }
        if (!known) throw ParseError("unknown key '" + it.key() + "' in " + where);
    }
}

std::vector<std::string> parse_name_array(const json& arr, const char* key) {
    if (!arr.is_array() || arr.empty()) {
        throw ParseError(std::string("'") + key + "' must be a non-empty array of names");
    }
    std::vector<std::string> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_string()) throw ParseError(std::string("'") + key + "' entries must be strings");
        out.push_back(v.get<std::string>());
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = i + 1; j < out.size(); ++j) {
            if (out[i] == out[j]) {
                throw ParseError(std::string("duplicate name '") + out[i] + "' in '" + key + "'");
            }
        }
    }
    return out;
}

// Parses a {name: prob} object into a sparse row over `names`.
SparseDist parse_dist(const json& obj, const std::vector<std::string>& names,
                      const char* kind, const std::string& where) {
    if (!obj.is_object()) throw ParseError("distribution in " + where + " must be an object");
    SparseDist out;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!it.value().is_number()) {
            throw ParseError("probability for '" + it.key() + "' in " + where + " must be a number");
        }
        int idx = lookup(names, it.key(), kind, where);
        out.emplace_back(idx, it.value().get<double>());
    }
    std::sort(out.begin(), out.end());
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].first == out[i - 1].first) {
            throw ParseError("duplicate entry '" + names[out[i].first] + "' in " + where);
        }
    }
    return out;
}

double row_sum(const SparseDist& row) {
    double s = 0.0;
    for (const auto& [i, p] : row) s += p;
    return s;
}

void renormalize(SparseDist& row) {
    double s = row_sum(row);
    if (s <= 0.0) return;
    for (auto& [i, p] : row) p /= s;
}

std::string fmt_sum(double s) {
    std::ostringstream os;
    os.precision(12);
    os << s;
    return os.str();
}

} // namespace

int Pomdp::state_index(const std::string& name) const {
    auto it = std::find(states.begin(), states.end(), name);
    if (it == states.end()) throw ParseError("unknown state '" + name + "'");
    return static_cast<int>(it - states.begin());
}

int Pomdp::action_index(const std::string& name) const {
    auto it = std::find(actions.begin(), actions.end(), name);
    if (it == actions.end()) throw ParseError("unknown action '" + name + "'");
    return static_cast<int>(it - actions.begin());
}

int Pomdp::observation_index(const std::string& name) const {
    auto it = std::find(observations.begin(), observations.end(), name);
    if (it == observations.end()) throw ParseError("unknown observation '" + name + "'");
    return static_cast<int>(it - observations.begin());
}

bool Pomdp::is_absorbing(int s) const {
    bool any = false;
    for (int a = 0; a < num_actions(); ++a) {
        const SparseDist& row = trans(s, a);
        if (row.empty()) continue;
        any = true;
        for (const auto& [t, p] : row) {
            if (t != s && p > 0.0) return false;
        }
    }
    return any;
}

const std::vector<int>& Pomdp::label_states(const std::string& name) const {
    auto it = labels.find(name);
    if (it == labels.end()) throw ParseError("unknown label '" + name + "'");
    return it->second;
}

ModelDocument parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
    if (!doc.is_object()) throw ParseError("model document must be a JSON object");
    reject_unknown_keys(doc,
                        {"states", "actions", "observations", "discount", "initial",
                         "transitions", "observation_fn", "labels", "features",
                         "default_spec", "theta_true"},
                        "model document");
    for (const char* key : {"states", "actions", "observations", "discount", "initial",
                            "transitions", "observation_fn"}) {
        if (!doc.contains(key)) throw ParseError(std::string("missing required key '") + key + "'");
    }

    ModelDocument out;
    Pomdp& p = out.pomdp;
    p.states = parse_name_array(doc["states"], "states");
    p.actions = parse_name_array(doc["actions"], "actions");
    p.observations = parse_name_array(doc["observations"], "observations");

    if (!doc["discount"].is_number()) throw ParseError("'discount' must be a number");
    p.discount = doc["discount"].get<double>();

    SparseDist init = parse_dist(doc["initial"], p.states, "state", "'initial'");
    p.initial = Eigen::VectorXd::Zero(p.num_states());
    for (const auto& [i, pr] : init) p.initial[i] = pr;

    p.transition.assign(static_cast<std::size_t>(p.num_states()) * p.num_actions(), {});
    if (!doc["transitions"].is_array()) throw ParseError("'transitions' must be an array");
    for (const auto& row : doc["transitions"]) {
        reject_unknown_keys(row, {"s", "a", "to"}, "transitions entry");
        for (const char* key : {"s", "a", "to"}) {
            if (!row.contains(key)) throw ParseError(std::string("transitions entry missing '") + key + "'");
        }
        int s = lookup(p.states, row["s"].get<std::string>(), "state", "'transitions'");
        int a = lookup(p.actions, row["a"].get<std::string>(), "action", "'transitions'");
        std::string where = "transition row (" + p.states[s] + ", " + p.actions[a] + ")";
        if (!p.trans(s, a).empty()) throw ParseError("duplicate " + where);
        p.trans(s, a) = parse_dist(row["to"], p.states, "state", where);
        if (p.trans(s, a).empty()) throw ParseError(where + " has no entries");
    }

    p.observation_fn.assign(p.num_states(), {});
    if (!doc["observation_fn"].is_array()) throw ParseError("'observation_fn' must be an array");
    for (const auto& row : doc["observation_fn"]) {
        reject_unknown_keys(row, {"s", "dist"}, "observation_fn entry");
        for (const char* key : {"s", "dist"}) {
            if (!row.contains(key)) throw ParseError(std::string("observation_fn entry missing '") + key + "'");
        }
        int s = lookup(p.states, row["s"].get<std::string>(), "state", "'observation_fn'");
        std::string where = "observation row (" + p.states[s] + ")";
        if (!p.observation_fn[s].empty()) throw ParseError("duplicate " + where);
        p.observation_fn[s] = parse_dist(row["dist"], p.observations, "observation", where);
    }

    if (doc.contains("labels")) {
        if (!doc["labels"].is_object()) throw ParseError("'labels' must be an object");
        for (auto it = doc["labels"].begin(); it != doc["labels"].end(); ++it) {
            if (!it.value().is_array()) throw ParseError("label '" + it.key() + "' must map to an array");
            std::vector<int> members;
            for (const auto& v : it.value()) {
                members.push_back(lookup(p.states, v.get<std::string>(), "state",
                                         "label '" + it.key() + "'"));
            }
            std::sort(members.begin(), members.end());
            members.erase(std::unique(members.begin(), members.end()), members.end());
            p.labels[it.key()] = std::move(members);
        }
    }

    if (doc.contains("default_spec")) {
        const json& sp = doc["default_spec"];
        reject_unknown_keys(sp, {"formula", "lambda"}, "default_spec");
        SpecText st;
        if (!sp.contains("formula") || !sp["formula"].is_string()) {
            throw ParseError("'default_spec.formula' must be a string");
        }
        st.formula = sp["formula"].get<std::string>();
        st.lambda = sp.contains("lambda") ? sp["lambda"].get<double>() : 1.0;
        p.default_spec = std::move(st);
    }

    if (doc.contains("theta_true")) {
        if (!doc["theta_true"].is_array()) throw ParseError("'theta_true' must be an array");
        Eigen::VectorXd th(doc["theta_true"].size());
        int i = 0;
        for (const auto& v : doc["theta_true"]) th[i++] = v.get<double>();
        p.theta_true = th;
    }

    if (doc.contains("features")) {
        const json& f = doc["features"];
        reject_unknown_keys(f, {"d", "entries"}, "features");
        if (!f.contains("d") || !f["d"].is_number_integer()) {
            throw ParseError("'features.d' must be an integer");
        }
        FeatureBasis fb;
        fb.d = f["d"].get<int>();
        if (fb.d <= 0) throw ParseError("'features.d' must be positive");
        fb.values = Eigen::MatrixXd::Zero(p.num_states() * p.num_actions(), fb.d);
        if (f.contains("entries")) {
            for (const auto& e : f["entries"]) {
                reject_unknown_keys(e, {"s", "a", "vec"}, "features entry");
                int s = lookup(p.states, e["s"].get<std::string>(), "state", "'features'");
                int a = lookup(p.actions, e["a"].get<std::string>(), "action", "'features'");
                if (!e.contains("vec") || !e["vec"].is_array() ||
                    static_cast<int>(e["vec"].size()) != fb.d) {
                    throw ParseError("feature vector for (" + p.states[s] + ", " + p.actions[a] +
                                     ") must have length " + std::to_string(fb.d));
                }
                for (int k = 0; k < fb.d; ++k) {
                    fb.values(s * p.num_actions() + a, k) = e["vec"][k].get<double>();
                }
            }
        }
        out.features = std::move(fb);
    }

    std::vector<Violation> violations = validate(p);
    if (!violations.empty()) {
        throw ValidationError(violations.front().where + ": " + violations.front().what);
    }
    if (out.features) {
        std::vector<Violation> fv = validate_features(p, *out.features);
        if (!fv.empty()) throw ValidationError(fv.front().where + ": " + fv.front().what);
    }

    // Rows passed the 1e-9 check; make them exact so downstream linear
    // algebra never sees rounding residue from the document.
    for (auto& row : p.transition) renormalize(row);
    for (auto& row : p.observation_fn) renormalize(row);
    p.initial /= p.initial.sum();

    return out;
}

ModelDocument load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("model-not-found", "cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::string serialize_model(const ModelDocument& doc) {
    const Pomdp& p = doc.pomdp;
    json j;
    j["states"] = p.states;
    j["actions"] = p.actions;
    j["observations"] = p.observations;
    j["discount"] = p.discount;

    json init = json::object();
    for (int s = 0; s < p.num_states(); ++s) {
        if (p.initial[s] != 0.0) init[p.states[s]] = p.initial[s];
    }
    j["initial"] = std::move(init);

    json trans = json::array();
    for (int s = 0; s < p.num_states(); ++s) {
        for (int a = 0; a < p.num_actions(); ++a) {
            const SparseDist& row = p.trans(s, a);
            if (row.empty()) continue;
            json to = json::object();
            for (const auto& [t, pr] : row) to[p.states[t]] = pr;
            trans.push_back({{"s", p.states[s]}, {"a", p.actions[a]}, {"to", std::move(to)}});
        }
    }
    j["transitions"] = std::move(trans);

    json obs = json::array();
    for (int s = 0; s < p.num_states(); ++s) {
        json dist = json::object();
        for (const auto& [z, pr] : p.observation_fn[s]) dist[p.observations[z]] = pr;
        obs.push_back({{"s", p.states[s]}, {"dist", std::move(dist)}});
    }
    j["observation_fn"] = std::move(obs);

    if (!p.labels.empty()) {
        json labels = json::object();
        for (const auto& [name, members] : p.labels) {
            json arr = json::array();
            for (int s : members) arr.push_back(p.states[s]);
            labels[name] = std::move(arr);
        }
        j["labels"] = std::move(labels);
    }

    if (doc.features) {
        const FeatureBasis& f = *doc.features;
        json entries = json::array();
        for (int s = 0; s < p.num_states(); ++s) {
            for (int a = 0; a < p.num_actions(); ++a) {
                Eigen::RowVectorXd v = f.values.row(s * p.num_actions() + a);
                if (v.isZero(0.0)) continue;
                json vec = json::array();
                for (int k = 0; k < f.d; ++k) vec.push_back(v[k]);
                entries.push_back({{"s", p.states[s]}, {"a", p.actions[a]}, {"vec", std::move(vec)}});
            }
        }
        j["features"] = {{"d", f.d}, {"entries", std::move(entries)}};
    }

    if (p.default_spec) {
        j["default_spec"] = {{"formula", p.default_spec->formula}, {"lambda", p.default_spec->lambda}};
    }
    if (p.theta_true) {
        json th = json::array();
        for (int k = 0; k < p.theta_true->size(); ++k) th.push_back((*p.theta_true)[k]);
        j["theta_true"] = std::move(th);
    }

    return j.dump(2) + "\n";
}

void save_model(const ModelDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write model file '" + path + "'");
    out << serialize_model(doc);
}

std::vector<Violation> validate(const Pomdp& p) {
    std::vector<Violation> out;
    if (p.num_states() == 0) out.push_back({"states", "empty state set"});
    if (p.num_actions() == 0) out.push_back({"actions", "empty action set"});
    if (p.num_observations() == 0) out.push_back({"observations", "empty observation set"});
    if (!(p.discount > 0.0 && p.discount < 1.0)) {
        out.push_back({"discount", "discount out of (0,1): " + fmt_sum(p.discount)});
    }

    for (int s = 0; s < p.num_states(); ++s) {
        bool any_action = false;
        for (int a = 0; a < p.num_actions(); ++a) {
            const SparseDist& row = p.trans(s, a);
            std::string where = "transition row (" + p.states[s] + ", " + p.actions[a] + ")";
            if (row.empty()) {
                out.push_back({where, "missing row: every action needs a full distribution"});
                continue;
            }
            any_action = true;
            for (const auto& [t, pr] : row) {
                if (t < 0 || t >= p.num_states()) {
                    out.push_back({where, "state index out of range"});
                }
                if (!(pr >= 0.0) || !std::isfinite(pr)) {
                    out.push_back({where, "negative or non-finite probability to '" +
                                              p.states[t] + "'"});
                }
            }
            double sum = row_sum(row);
            if (std::abs(sum - 1.0) > kProbTol) {
                out.push_back({where, "sums to " + fmt_sum(sum)});
            }
        }
        if (!any_action) {
            out.push_back({"state " + p.states[s], "no enabled action"});
        }

        std::string owhere = "observation row (" + p.states[s] + ")";
        if (p.observation_fn[s].empty()) {
            out.push_back({owhere, "missing observation distribution"});
        } else {
            for (const auto& [z, pr] : p.observation_fn[s]) {
                if (z < 0 || z >= p.num_observations()) {
                    out.push_back({owhere, "observation index out of range"});
                }
                if (!(pr >= 0.0) || !std::isfinite(pr)) {
                    out.push_back({owhere, "negative or non-finite probability"});
                }
            }
            double sum = row_sum(p.observation_fn[s]);
            if (std::abs(sum - 1.0) > kProbTol) {
                out.push_back({owhere, "sums to " + fmt_sum(sum)});
            }
        }
    }

    double isum = 0.0;
    for (int s = 0; s < p.num_states(); ++s) {
        if (p.initial[s] < 0.0 || !std::isfinite(p.initial[s])) {
            out.push_back({"initial", "negative or non-finite mass on '" + p.states[s] + "'"});
        }
        isum += p.initial[s];
    }
    if (std::abs(isum - 1.0) > kProbTol) {
        out.push_back({"initial", "sums to " + fmt_sum(isum)});
    }

    for (const auto& [name, members] : p.labels) {
        for (int s : members) {
            if (s < 0 || s >= p.num_states()) {
                out.push_back({"label '" + name + "'", "state index out of range"});
            }
        }
    }
    return out;
}

std::vector<Violation> validate_features(const Pomdp& p, const FeatureBasis& f) {
    std::vector<Violation> out;
    if (f.values.rows() != static_cast<Eigen::Index>(p.num_states()) * p.num_actions() ||
        f.values.cols() != f.d) {
        out.push_back({"features", "value matrix shape does not match d and |S|*|A|"});
        return out;
    }
    if (!f.values.allFinite()) {
        out.push_back({"features", "non-finite feature value"});
    }
    return out;
}

Belief belief_update(const Pomdp& p, const Belief& b, int action, int observation) {
    const int S = p.num_states();
    if (action < 0 || action >= p.num_actions()) throw ParseError("action index out of range");
    if (observation < 0 || observation >= p.num_observations()) {
        throw ParseError("observation index out of range");
    }

    Eigen::VectorXd pred = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
        double bs = b.probabilities[s];
        if (bs == 0.0) continue;
        for (const auto& [t, pr] : p.trans(s, action)) pred[t] += bs * pr;
    }
    Eigen::VectorXd post = Eigen::VectorXd::Zero(S);
    for (int t = 0; t < S; ++t) {
        if (pred[t] == 0.0) continue;
        for (const auto& [z, pr] : p.observation_fn[t]) {
            if (z == observation) post[t] = pred[t] * pr;
        }
    }
    double norm = post.sum();
    if (norm <= 0.0) {
        throw InconsistentTraceError("observation '" + p.observations[observation] +
                                     "' has probability 0 after action '" +
                                     p.actions[action] + "'");
    }
    return Belief{post / norm};
}

} // namespace pomirl
