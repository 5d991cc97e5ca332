#ifndef BTGP_CLI_MODEL_FILE_HPP
#define BTGP_CLI_MODEL_FILE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "btgp/encoding.hpp"
#include "btgp/ensemble.hpp"

namespace btgp::cli {

enum class OutOfBoxMode : std::uint8_t { zero = 0, joint_rescale = 1 };

// A trained model (one member) or ensemble with everything predict needs.
struct ModelBundle {
  EncodingConfig encoding;
  std::vector<std::string> features;
  std::string target;
  Standardizer standardizer;
  OutOfBoxMode out_of_box = OutOfBoxMode::zero;
  EnsembleModel ensemble;

  bool is_ensemble() const { return ensemble.members.size() > 1; }
};

inline constexpr char kModelMagic[8] = {'B', 'T', 'G', 'P', 'M', 'O', 'D', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;

// Binary layout is described in docs/model_format.md.
void save_model(const ModelBundle &model, std::ostream &out);
void save_model(const ModelBundle &model, const std::filesystem::path &path);

// Throws DataError on a bad magic, unsupported version or truncated file.
ModelBundle load_model(std::istream &in);
ModelBundle load_model(const std::filesystem::path &path);

struct BundlePrediction {
  PredictiveOutput output; // original units
  PredictiveOutput standardized;
  std::vector<bool> out_of_box;
  // Member outputs and weights (standardized scale); set for ensembles.
  std::optional<MixturePrediction> mixture;
};

BundlePrediction predict_bundle(const ModelBundle &model, const Eigen::MatrixXd &X);

} // namespace btgp::cli

#endif // BTGP_CLI_MODEL_FILE_HPP
