#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace mindplane::pipeline {

struct Rating {
  std::string session_id;
  std::string model;  // "svm" or "fnn"
  int points = 0;     // 1..10
  std::string utc;

  friend bool operator==(const Rating&, const Rating&) = default;
};

// Parses {"session_id":"...","model":"svm"|"fnn","points":1..10}.
// Throws ValidationError on anything else.
Rating parse_rating(std::string_view json);

// Session ratings in a CSV file with header session_id,model,points,utc.
// Submitting again for the same (session_id, model) replaces the earlier row.
class RatingStore {
public:
  explicit RatingStore(std::filesystem::path path);

  void submit(Rating rating);
  std::vector<Rating> load() const;
  const std::filesystem::path& path() const { return path_; }

private:
  std::vector<Rating> load_unlocked() const;

  std::filesystem::path path_;
  mutable std::mutex mu_;
};

} // namespace mindplane::pipeline
