#pragma once

// Text serialization for trained models.
//
// Each model is a sequence of whitespace-separated, tag-led records:
//   forest <n_trees> <n_features> <hard_vote>   followed by n_trees tree records
//   tree <n_nodes> <n_features>                 followed by n_nodes node records
//   node <feature> <threshold> <left> <right> <value> <n_samples>
//   logreg <d> <bias> <l2> / weights ... / mean ... / scale ...
//   gbt <n_trees> <n_features> <base_score> <learning_rate>   then tree records
// Reals are C99 hex-floats so reloads are bit-exact. A standalone model
// file starts with the line "flare-model 1".

#include <istream>
#include <memory>
#include <string>
#include <string_view>

#include "flare/learners/classifier.hpp"

namespace flare {

inline constexpr int kModelFormatVersion = 1;

std::string hexfloat(double v);

/// Whitespace tokenizer with typed, error-checked reads.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word();
  void expect(std::string_view tag);
  double real();
  long long integer();
  std::size_t count();

 private:
  std::istream& in_;
};

std::unique_ptr<Classifier> read_classifier(TokenReader& reader);

void save_model_file(const std::string& path, const Classifier& model);
std::unique_ptr<Classifier> load_model_file(const std::string& path);

}  // namespace flare
