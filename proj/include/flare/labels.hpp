#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace flare {

enum class ArchFamily { Cnn, Rnn, Other };

/// One-vs-rest target of a fusion pipeline.
enum class TargetClass { Cnn, Rnn };

inline constexpr TargetClass kTargetClasses[] = {TargetClass::Cnn, TargetClass::Rnn};

std::string_view to_string(ArchFamily f);
std::string_view to_string(TargetClass t);
ArchFamily parse_family(std::string_view s);
TargetClass parse_target(std::string_view s);

inline bool matches(ArchFamily f, TargetClass t) {
  return (t == TargetClass::Cnn && f == ArchFamily::Cnn) ||
         (t == TargetClass::Rnn && f == ArchFamily::Rnn);
}

/// Family of a known model name, or nullopt for names outside the registry.
std::optional<ArchFamily> registry_family(std::string_view model_name);

struct ArchLabel {
  ArchFamily family = ArchFamily::Other;
  std::string model_name;
  std::string dataset_name;
  std::string aggregation;     // FedAvg | WeightedFedAvg | FedProx, free text for captures
  std::string client_profile;  // hardware profile name

  /// Throws InvalidConfig when model_name is registered under another family.
  void validate() const;

  bool operator==(const ArchLabel&) const = default;
};

/// Label whose family is looked up in the registry; throws UnknownModelName.
ArchLabel make_label(std::string_view model_name, std::string_view dataset_name);

}  // namespace flare
