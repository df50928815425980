#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "pirate/core.hpp"
#include "pirate/random.hpp"

namespace pirate::testing {

inline Embedding random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform() * 2.0 - 1.0;
  return Embedding::normalized(std::move(v));
}

inline std::vector<Embedding> random_units(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_unit(rng, dim));
  return out;
}

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words{
      "fever",  "cough",   "rash",    "ankle",  "migraine", "insulin", "asthma",  "thyroid", "kidney", "liver",
      "tendon", "allergy", "vaccine", "glucose", "sinus",   "spine",   "retina",  "plasma",  "enzyme", "cortex",
      "lung",   "artery",  "biopsy",  "tumor",  "ulcer",    "bladder", "colon",   "pelvis",  "tonsil", "femur",
      "nodule", "cyst",    "lesion",  "pulse",  "reflex",   "saliva",  "sputum",  "hernia",  "gout",   "eczema"};
  return words;
}

inline std::string random_text(Rng& rng, std::size_t tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens; ++i) {
    if (i) s += ' ';
    s += vocabulary()[rng.below(vocabulary().size())];
  }
  return s;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pirate-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace pirate::testing
