#pragma once

#include "mindplane/csp.hpp"
#include "mindplane/models.hpp"
#include "mindplane/signal_core.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace mindplane::models {

inline constexpr int kModelFormatVersion = 1;

struct ModelMetadata {
  ChannelSet channels = ChannelSet::default_set();
  std::size_t window_len = kDefaultWindowLen;
  std::string created_utc;
};

// CSP filters + linear SVM over [H_T | H_R].
struct SvmModelFile {
  ModelMetadata meta;
  csp::SpatialFilterPair filters;
  LinearSvmModel svm;
};

// Network over the flattened raw window.
struct FnnModelFile {
  ModelMetadata meta;
  FeedforwardNet net;
};

using ModelFile = std::variant<SvmModelFile, FnnModelFile>;

// "svm" or "fnn"
std::string_view model_kind(const ModelFile& model);

// Versioned JSON document. Serialization is a pure function of the model, so
// equal models give equal bytes.
std::string serialize_model(const ModelFile& model);
ModelFile parse_model(std::string_view json);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

// Current UTC time as ISO-8601, e.g. "2025-01-31T12:00:00Z".
std::string utc_now_iso8601();

} // namespace mindplane::models
