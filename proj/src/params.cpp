#include "kgr/params.hpp"

#include <fstream>
#include <json.hpp>

namespace kgr {

LambdaMode lambda_mode_from_string(std::string_view s) {
    if (s == "dynamic") return LambdaMode::Dynamic;
    if (s == "fixed-0") return LambdaMode::Fixed0;
    if (s == "fixed-1") return LambdaMode::Fixed1;
    if (s == "global-scalar") return LambdaMode::GlobalScalar;
    throw std::invalid_argument("unknown lambda mode: " + std::string(s));
}

std::string to_string(LambdaMode m) {
    switch (m) {
        case LambdaMode::Dynamic: return "dynamic";
        case LambdaMode::Fixed0: return "fixed-0";
        case LambdaMode::Fixed1: return "fixed-1";
        case LambdaMode::GlobalScalar: return "global-scalar";
    }
    return "?";
}

void save_checkpoint(const std::string& path, const ModelParams<double>& p, LambdaMode lambda_mode,
                     Scenario scenario) {
    nlohmann::json j;
    j["version"] = 1;
    j["lambda_mode"] = to_string(lambda_mode);
    j["scenario"] = to_string(scenario);
    j["dims"] = {{"d", p.dims.d},
                 {"d_t", p.dims.d_t},
                 {"L", p.dims.L},
                 {"temporal", p.dims.temporal},
                 {"inductive", p.dims.inductive},
                 {"n_entities", p.dims.n_entities},
                 {"n_relations", p.dims.n_relations}};
    nlohmann::json params = nlohmann::json::object();
    for (size_t i = 0; i < p.store.size(); ++i) {
        const auto& m = p.store.values[i];
        std::vector<double> data(m.size());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                data[r * m.cols() + c] = m(r, c);  // row-major
        params[p.store.names[i]] = {{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
    }
    j["params"] = std::move(params);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump();
}

ModelParams<double> load_checkpoint(const std::string& path, LambdaMode* lambda_mode,
                                    Scenario* scenario) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint version in " + path);

    ModelDims dims;
    const auto& jd = j.at("dims");
    dims.d = jd.at("d").get<int>();
    dims.d_t = jd.at("d_t").get<int>();
    dims.L = jd.at("L").get<int>();
    dims.temporal = jd.at("temporal").get<bool>();
    dims.inductive = jd.at("inductive").get<bool>();
    dims.n_entities = jd.at("n_entities").get<int>();
    dims.n_relations = jd.at("n_relations").get<int>();

    ModelParams<double> p = ModelParams<double>::make(dims, 0);
    const auto& params = j.at("params");
    for (size_t i = 0; i < p.store.size(); ++i) {
        const std::string& name = p.store.names[i];
        if (!params.contains(name))
            throw std::runtime_error("checkpoint missing parameter " + name);
        const auto& entry = params.at(name);
        auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
        auto& m = p.store.values[i];
        if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols())
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        auto data = entry.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(data.size()) != m.size())
            throw std::runtime_error("checkpoint data size mismatch for " + name);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                double v = data[r * m.cols() + c];
                if (!std::isfinite(v))
                    throw std::runtime_error("non-finite value in checkpoint for " + name);
                m(r, c) = v;
            }
    }
    if (lambda_mode) *lambda_mode = lambda_mode_from_string(j.at("lambda_mode").get<std::string>());
    if (scenario) *scenario = scenario_from_string(j.at("scenario").get<std::string>());
    return p;
}

}  // namespace kgr
