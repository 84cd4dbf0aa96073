#pragma once

#include <filesystem>

#include "aedet/autoencoder.hpp"
#include "aedet/dataset.hpp"

namespace aedet {

// Model file: a single JSON document
//   {format_version: 1, node_id, F, hidden, hyper{...}, norm{...}, train_mae,
//    encoder{weights, biases}, decoder{weights, biases}}
// with weights as flat row-major arrays of decimal floats. Loading validates
// every shape against F and 10*F and throws DataError on mismatch.
void save_model(const AutoencoderModel<Real>& model, const std::filesystem::path& path);
AutoencoderModel<Real> load_model(const std::filesystem::path& path);

// Normalization parameters as their own document
//   {feature_names, min[], span[], fitted_on}
// stored alongside the model.
void save_normalization(const NormalizationParams& params, const std::filesystem::path& path);
NormalizationParams load_normalization(const std::filesystem::path& path);

}  // namespace aedet
