#include "mindplane/model_io.hpp"

#include "mindplane/error.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace mindplane::models {

using Json = nlohmann::ordered_json;

std::string_view model_kind(const ModelFile& model) {
  return std::holds_alternative<SvmModelFile>(model) ? "svm" : "fnn";
}

namespace {

Json standardization_json(const Standardizer& s) {
  return Json{{"means", s.means}, {"stds", s.stds}, {"clamped", s.clamped}};
}

Standardizer standardization_from(const Json& j) {
  Standardizer s;
  s.means = j.at("means").get<std::vector<double>>();
  s.stds = j.at("stds").get<std::vector<double>>();
  s.clamped = j.value("clamped", false);
  if (s.means.size() != s.stds.size())
    throw ValidationError("model file: standardization vectors differ in length");
  for (double sd : s.stds)
    if (!(sd > 0.0)) throw ValidationError("model file: standardization std must be positive");
  return s;
}

Json header(const ModelFile& model, const ModelMetadata& meta) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["model_kind"] = std::string(model_kind(model));
  j["channels"] = meta.channels.names();
  j["window_len"] = meta.window_len;
  return j;
}

} // namespace

std::string serialize_model(const ModelFile& model) {
  Json j;
  if (const auto* svm = std::get_if<SvmModelFile>(&model)) {
    j = header(model, svm->meta);
    j["filters"] = Json{{"w_T", svm->filters.w_T},
                        {"w_R", svm->filters.w_R},
                        {"lambda_T", svm->filters.lambda_T},
                        {"lambda_R", svm->filters.lambda_R}};
    j["standardization"] = standardization_json(svm->svm.standardization);
    j["weights"] = Json{{"w", svm->svm.weights}, {"b", svm->svm.bias}};
    j["hyper"] = Json{{"lambda", svm->svm.hyper.lambda},
                      {"epochs", svm->svm.hyper.epochs},
                      {"initial_step", svm->svm.hyper.initial_step}};
    j["seed"] = svm->svm.hyper.seed;
    j["created_utc"] = svm->meta.created_utc;
  } else {
    const auto& fnn = std::get<FnnModelFile>(model);
    j = header(model, fnn.meta);
    j["standardization"] = standardization_json(fnn.net.standardization);
    Json w1 = Json::array();
    for (std::size_t r = 0; r < fnn.net.w1.rows(); ++r) {
      auto row = fnn.net.w1.row(r);
      w1.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["weights"] = Json{{"W1", w1}, {"b1", fnn.net.b1}, {"W2", fnn.net.w2}, {"b2", fnn.net.b2}};
    j["hyper"] = Json{{"learning_rate", fnn.net.hyper.learning_rate},
                      {"epochs", fnn.net.hyper.epochs},
                      {"standardize", fnn.net.hyper.standardize},
                      {"hidden_activation", "tanh"},
                      {"output_activation", "linear"}};
    j["seed"] = fnn.net.hyper.seed;
    j["created_utc"] = fnn.meta.created_utc;
  }
  return j.dump(2) + "\n";
}

ModelFile parse_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what(), e.byte);
  }

  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw ValidationError("unsupported model format_version " + std::to_string(version));

    ModelMetadata meta;
    meta.channels = ChannelSet::parse(j.at("channels").get<std::vector<std::string>>());
    meta.window_len = j.value("window_len", kDefaultWindowLen);
    meta.created_utc = j.value("created_utc", std::string{});
    const auto seed = j.value("seed", std::uint64_t{0});
    const auto kind = j.at("model_kind").get<std::string>();
    const Json& weights = j.at("weights");
    const Json& hyper = j.at("hyper");

    if (kind == "svm") {
      SvmModelFile m;
      m.meta = std::move(meta);
      const Json& f = j.at("filters");
      m.filters.w_T = f.at("w_T").get<std::vector<double>>();
      m.filters.w_R = f.at("w_R").get<std::vector<double>>();
      m.filters.lambda_T = f.value("lambda_T", 0.5);
      m.filters.lambda_R = f.value("lambda_R", 0.5);
      m.svm.standardization = standardization_from(j.at("standardization"));
      m.svm.weights = weights.at("w").get<std::vector<double>>();
      m.svm.bias = weights.at("b").get<double>();
      m.svm.hyper.lambda = hyper.at("lambda").get<double>();
      m.svm.hyper.epochs = hyper.at("epochs").get<int>();
      m.svm.hyper.initial_step = hyper.at("initial_step").get<double>();
      m.svm.hyper.seed = seed;
      const std::size_t c = m.meta.channels.size();
      if (m.filters.w_T.size() != c || m.filters.w_R.size() != c)
        throw ValidationError("model file: filter length does not match channel count");
      if (m.svm.weights.size() != 2 * m.meta.window_len ||
          m.svm.standardization.dimension() != m.svm.weights.size())
        throw ValidationError("model file: svm weights do not match 2 x window_len");
      return m;
    }
    if (kind == "fnn") {
      FnnModelFile m;
      m.meta = std::move(meta);
      m.net.standardization = standardization_from(j.at("standardization"));
      const auto rows = weights.at("W1").get<std::vector<std::vector<double>>>();
      if (rows.size() != kNetHidden) throw ValidationError("model file: W1 must have 10 rows");
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != kNetInputs)
          throw ValidationError("model file: W1 rows must have 10 columns");
        std::copy(rows[r].begin(), rows[r].end(), m.net.w1.row(r).begin());
      }
      m.net.b1 = weights.at("b1").get<std::vector<double>>();
      m.net.w2 = weights.at("W2").get<std::vector<double>>();
      m.net.b2 = weights.at("b2").get<double>();
      m.net.hyper.learning_rate = hyper.at("learning_rate").get<double>();
      m.net.hyper.epochs = hyper.at("epochs").get<int>();
      m.net.hyper.standardize = hyper.value("standardize", true);
      m.net.hyper.seed = seed;
      validate_network(m.net);
      if (m.meta.channels.size() * m.meta.window_len != kNetInputs)
        throw ValidationError("model file: channels x window_len must equal 10 for fnn");
      return m;
    }
    throw ValidationError("unknown model_kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << serialize_model(model);
  if (!out) throw IoError("failed writing " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string utc_now_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace mindplane::models
