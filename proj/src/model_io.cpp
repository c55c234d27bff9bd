#include "ensel/model_io.hpp"

#include <json.hpp>

#include "ensel/error.hpp"

namespace ensel {

using nlohmann::json;

namespace {

json matrix_to_json(const FeatureMatrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}};
}

FeatureMatrix matrix_from_json(const json& j) {
    FeatureMatrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != m.rows() * m.cols()) throw Error(ErrorKind::Parse, "matrix size mismatch in model file");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = values[r * m.cols() + c];
    }
    return m;
}

json labels_to_json(const std::vector<Label>& labels) {
    std::string s;
    for (Label l : labels) s += to_string(l);
    return s;
}

std::vector<Label> labels_from_json(const json& j) {
    std::vector<Label> out;
    for (char c : j.get<std::string>()) {
        if (c != 'W' && c != 'G') throw Error(ErrorKind::Parse, "bad label in model file");
        out.push_back(c == 'W' ? Label::Weak : Label::Good);
    }
    return out;
}

json state_to_json(const KnnState& s) {
    return {{"k", s.k}, {"points", matrix_to_json(s.points)}, {"labels", labels_to_json(s.labels)}};
}

json state_to_json(const NaiveBayesState& s) {
    json j{{"kernel", s.kernel}, {"log_prior_weak", s.log_prior_weak}, {"log_prior_good", s.log_prior_good}};
    for (int c = 0; c < 2; ++c) {
        const char* name = c == 0 ? "good" : "weak";
        j[name] = {{"mean", s.mean[c]},
                   {"variance", s.variance[c]},
                   {"bandwidth", s.bandwidth[c]},
                   {"samples", matrix_to_json(s.samples[c])}};
    }
    return j;
}

json state_to_json(const LogisticState& s) { return {{"weights", s.weights}, {"intercept", s.intercept}}; }

json state_to_json(const ForestState& s) {
    json trees = json::array();
    for (const auto& tree : s.trees) {
        json nodes = json::array();
        for (const auto& n : tree.nodes) {
            nodes.push_back({n.feature, n.threshold, n.left, n.right, std::string(to_string(n.vote))});
        }
        trees.push_back(std::move(nodes));
    }
    return {{"mtry", s.mtry}, {"trees", std::move(trees)}};
}

json state_to_json(const SvmState& s) {
    return {{"C", s.c},
            {"sigma", s.sigma},
            {"support", matrix_to_json(s.support)},
            {"coef", s.coef},
            {"bias", s.bias},
            {"platt",
             {{"a", s.platt.a},
              {"b", s.platt.b},
              {"fallback", s.platt.fallback},
              {"min_margin", s.platt.min_margin},
              {"max_margin", s.platt.max_margin}}}};
}

json state_to_json(const MlpState& s) {
    return {{"inputs", s.inputs}, {"hidden", s.hidden}, {"w1", s.w1}, {"b1", s.b1}, {"w2", s.w2}, {"b2", s.b2}};
}

ModelState state_from_json(AlgorithmId id, const json& j) {
    switch (id) {
        case AlgorithmId::KNN:
            return KnnState{j.at("k").get<int>(), matrix_from_json(j.at("points")), labels_from_json(j.at("labels"))};
        case AlgorithmId::NB: {
            NaiveBayesState s;
            s.kernel = j.at("kernel").get<bool>();
            s.log_prior_weak = j.at("log_prior_weak").get<double>();
            s.log_prior_good = j.at("log_prior_good").get<double>();
            for (int c = 0; c < 2; ++c) {
                const auto& part = j.at(c == 0 ? "good" : "weak");
                s.mean[c] = part.at("mean").get<std::vector<double>>();
                s.variance[c] = part.at("variance").get<std::vector<double>>();
                s.bandwidth[c] = part.at("bandwidth").get<std::vector<double>>();
                s.samples[c] = matrix_from_json(part.at("samples"));
            }
            return s;
        }
        case AlgorithmId::LREG:
            return LogisticState{j.at("weights").get<std::vector<double>>(), j.at("intercept").get<double>()};
        case AlgorithmId::RF: {
            ForestState s;
            s.mtry = j.at("mtry").get<int>();
            for (const auto& nodes : j.at("trees")) {
                DecisionTree tree;
                for (const auto& n : nodes) {
                    const auto vote = n.at(4).get<std::string>();
                    tree.nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                                  n.at(3).get<int>(), vote == "W" ? Label::Weak : Label::Good});
                }
                s.trees.push_back(std::move(tree));
            }
            return s;
        }
        case AlgorithmId::SVM: {
            SvmState s;
            s.c = j.at("C").get<double>();
            s.sigma = j.at("sigma").get<double>();
            s.support = matrix_from_json(j.at("support"));
            s.coef = j.at("coef").get<std::vector<double>>();
            s.bias = j.at("bias").get<double>();
            const auto& p = j.at("platt");
            s.platt = PlattFit{p.at("a").get<double>(), p.at("b").get<double>(), p.at("fallback").get<bool>(),
                               p.at("min_margin").get<double>(), p.at("max_margin").get<double>()};
            return s;
        }
        case AlgorithmId::MLP: {
            MlpState s;
            s.inputs = j.at("inputs").get<std::size_t>();
            s.hidden = j.at("hidden").get<std::size_t>();
            s.w1 = j.at("w1").get<std::vector<double>>();
            s.b1 = j.at("b1").get<std::vector<double>>();
            s.w2 = j.at("w2").get<std::vector<double>>();
            s.b2 = j.at("b2").get<double>();
            return s;
        }
    }
    throw Error(ErrorKind::Parse, "unknown algorithm in model file");
}

}  // namespace

std::string dump_model(const TrainedModel& model) {
    json params = json::object();
    for (const auto& [name, value] : model.params.entries) {
        if (const auto* b = std::get_if<bool>(&value)) params[name] = *b;
        else params[name] = std::get<double>(value);
    }
    json j{{"format", "ensel-model"},
           {"version", kModelFormatVersion},
           {"algorithm", std::string(to_string(model.algorithm))},
           {"params", std::move(params)},
           {"train_seed", model.train_seed},
           {"feature_names", model.feature_names},
           {"converged", model.converged},
           {"iterations", model.iterations}};
    j["state"] = std::visit([](const auto& s) { return state_to_json(s); }, model.state);
    return j.dump(1);
}

TrainedModel load_model(std::string_view text) {
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "ensel-model") throw Error(ErrorKind::Parse, "not a model file");
        if (j.at("version").get<int>() != kModelFormatVersion) {
            throw Error(ErrorKind::Parse, "unsupported model format version");
        }
        TrainedModel m;
        m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        m.params.algorithm = m.algorithm;
        for (const auto& [name, value] : j.at("params").items()) {
            if (value.is_boolean()) m.params.entries[name] = value.get<bool>();
            else m.params.entries[name] = value.get<double>();
        }
        m.train_seed = j.at("train_seed").get<std::uint64_t>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.converged = j.at("converged").get<bool>();
        m.iterations = j.at("iterations").get<std::size_t>();
        m.state = state_from_json(m.algorithm, j.at("state"));
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed model file: ") + e.what());
    }
}

}  // namespace ensel
