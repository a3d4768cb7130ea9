#include "mindplane/ratings.hpp"

#include "mindplane/error.hpp"
#include "mindplane/model_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mindplane::pipeline {

namespace {

bool csv_safe(std::string_view s) {
  return std::none_of(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '"'; });
}

void validate(const Rating& r) {
  if (r.session_id.empty() || !csv_safe(r.session_id))
    throw ValidationError("session_id must be non-empty and contain no commas, quotes or newlines");
  if (r.model != "svm" && r.model != "fnn") throw ValidationError("model must be \"svm\" or \"fnn\"");
  if (r.points < 1 || r.points > 10) throw ValidationError("points must lie in 1..10");
}

} // namespace

Rating parse_rating(std::string_view text) {
  Rating r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.session_id = j.at("session_id").get<std::string>();
    r.model = j.at("model").get<std::string>();
    const auto& points = j.at("points");
    if (!points.is_number_integer()) throw ValidationError("points must be an integer");
    r.points = points.get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rating: ") + e.what());
  }
  validate(r);
  return r;
}

RatingStore::RatingStore(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<Rating> RatingStore::load() const {
  std::lock_guard lock(mu_);
  return load_unlocked();
}

std::vector<Rating> RatingStore::load_unlocked() const {
  std::vector<Rating> out;
  std::ifstream in(path_);
  if (!in) return out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    Rating r;
    std::string points;
    std::getline(fields, r.session_id, ',');
    std::getline(fields, r.model, ',');
    std::getline(fields, points, ',');
    std::getline(fields, r.utc);
    r.points = std::stoi(points);
    out.push_back(std::move(r));
  }
  return out;
}

void RatingStore::submit(Rating rating) {
  validate(rating);
  if (rating.utc.empty()) rating.utc = models::utc_now_iso8601();

  std::lock_guard lock(mu_);
  auto rows = load_unlocked();
  auto it = std::find_if(rows.begin(), rows.end(), [&](const Rating& r) {
    return r.session_id == rating.session_id && r.model == rating.model;
  });
  if (it != rows.end())
    *it = rating;
  else
    rows.push_back(rating);

  // Rewrite through a temporary so readers never see a half-written file.
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write ratings file " + tmp.string());
    out << "session_id,model,points,utc\n";
    for (const auto& r : rows) out << r.session_id << ',' << r.model << ',' << r.points << ',' << r.utc << '\n';
    if (!out) throw IoError("failed writing ratings file " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec) throw IoError("cannot replace ratings file " + path_.string() + ": " + ec.message());
}

} // namespace mindplane::pipeline
