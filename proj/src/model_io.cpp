#include "aedet/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "aedet/errors.hpp"

namespace aedet {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    // flat row-major array
    std::vector<Real> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    return json(flat);
}

Matrix matrix_from_json(const json& j, Index rows, Index cols, const std::string& what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows * cols)
        throw DataError("model file: " + what + " must hold " + std::to_string(rows * cols) +
                        " values");
    Matrix m(rows, cols);
    std::size_t i = 0;
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) m(r, c) = j[i++].get<Real>();
    return m;
}

Vector vector_from_json(const json& j, Index size, const std::string& what) {
    if (!j.is_array() || static_cast<Index>(j.size()) != size)
        throw DataError("model file: " + what + " must hold " + std::to_string(size) + " values");
    Vector v(size);
    for (Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<Real>();
    return v;
}

json norm_to_json(const NormalizationParams& params) {
    json j;
    j["feature_names"] = params.feature_names;
    j["min"] = std::vector<Real>(params.min.data(), params.min.data() + params.min.size());
    j["span"] = std::vector<Real>(params.span.data(), params.span.data() + params.span.size());
    j["fitted_on"] = params.fitted_on;
    return j;
}

NormalizationParams norm_from_json(const json& j) {
    NormalizationParams params;
    params.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto features = static_cast<Index>(params.feature_names.size());
    params.min = vector_from_json(j.at("min"), features, "norm.min");
    params.span = vector_from_json(j.at("span"), features, "norm.span");
    params.fitted_on = j.at("fitted_on").get<std::size_t>();
    for (Index i = 0; i < features; ++i)
        if (params.span[i] < 0) throw DataError("model file: negative normalization span");
    return params;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return j;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

void save_model(const AutoencoderModel<Real>& model, const std::filesystem::path& path) {
    const Index features = model.feature_count();
    const Index hidden = model.hidden_count();
    json j;
    j["format_version"] = 1;
    j["node_id"] = model.node_id;
    j["F"] = features;
    j["hidden"] = hidden;
    j["hyper"] = {{"epochs", model.hyper.epochs},
                  {"batch_size", model.hyper.batch_size},
                  {"learning_rate", model.hyper.learning_rate},
                  {"adam_beta1", model.hyper.adam_beta1},
                  {"adam_beta2", model.hyper.adam_beta2},
                  {"adam_epsilon", model.hyper.adam_epsilon},
                  {"l1_lambda", model.hyper.l1_lambda},
                  {"rng_seed", model.hyper.rng_seed}};
    j["norm"] = norm_to_json(model.norm);
    j["train_mae"] = model.train_mae;
    j["encoder"] = {{"weights", matrix_to_json(model.encoder.weights)},
                    {"biases", json(std::vector<Real>(
                                   model.encoder.biases.data(),
                                   model.encoder.biases.data() + model.encoder.biases.size()))}};
    j["decoder"] = {{"weights", matrix_to_json(model.decoder.weights)},
                    {"biases", json(std::vector<Real>(
                                   model.decoder.biases.data(),
                                   model.decoder.biases.data() + model.decoder.biases.size()))}};
    write_json_file(j, path);
}

AutoencoderModel<Real> load_model(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    if (j.value("format_version", 0) != 1)
        throw DataError(path.string() + ": unsupported model format_version");

    AutoencoderModel<Real> model;
    model.node_id = j.at("node_id").get<std::string>();
    const auto features = j.at("F").get<Index>();
    const auto hidden = j.at("hidden").get<Index>();
    if (features < 1 || hidden != 10 * features)
        throw DataError(path.string() + ": hidden width must be 10x the feature width");

    const json& h = j.at("hyper");
    model.hyper.epochs = h.at("epochs").get<int>();
    model.hyper.batch_size = h.at("batch_size").get<int>();
    model.hyper.learning_rate = h.at("learning_rate").get<Real>();
    model.hyper.adam_beta1 = h.at("adam_beta1").get<Real>();
    model.hyper.adam_beta2 = h.at("adam_beta2").get<Real>();
    model.hyper.adam_epsilon = h.at("adam_epsilon").get<Real>();
    model.hyper.l1_lambda = h.at("l1_lambda").get<Real>();
    model.hyper.rng_seed = h.at("rng_seed").get<std::uint64_t>();

    model.norm = norm_from_json(j.at("norm"));
    if (model.norm.feature_count() != features)
        throw DataError(path.string() + ": normalization width does not match F");
    model.train_mae = j.at("train_mae").get<Real>();

    model.encoder.weights = matrix_from_json(j.at("encoder").at("weights"), hidden, features,
                                             "encoder.weights");
    model.encoder.biases = vector_from_json(j.at("encoder").at("biases"), hidden,
                                            "encoder.biases");
    model.decoder.weights = matrix_from_json(j.at("decoder").at("weights"), features, hidden,
                                             "decoder.weights");
    model.decoder.biases = vector_from_json(j.at("decoder").at("biases"), features,
                                            "decoder.biases");
    return model;
}

void save_normalization(const NormalizationParams& params, const std::filesystem::path& path) {
    write_json_file(norm_to_json(params), path);
}

NormalizationParams load_normalization(const std::filesystem::path& path) {
    return norm_from_json(load_json_file(path));
}

}  // namespace aedet
