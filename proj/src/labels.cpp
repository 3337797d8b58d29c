#include "flare/labels.hpp"

#include <array>
#include <utility>

#include "flare/error.hpp"

namespace flare {

namespace {

constexpr std::array<std::pair<std::string_view, ArchFamily>, 17> kRegistry{{
    {"resnet18", ArchFamily::Cnn},
    {"mobilenetv2", ArchFamily::Cnn},
    {"densenet", ArchFamily::Cnn},
    {"custom_cnn", ArchFamily::Cnn},
    {"vgg11", ArchFamily::Cnn},
    {"vanilla_rnn", ArchFamily::Rnn},
    {"lstm", ArchFamily::Rnn},
    {"bilstm", ArchFamily::Rnn},
    {"gru", ArchFamily::Rnn},
    {"lstm_gru", ArchFamily::Rnn},
    {"mlp", ArchFamily::Other},
    {"autoencoder", ArchFamily::Other},
    {"transformer", ArchFamily::Other},
    {"logistic", ArchFamily::Other},
    {"gnn", ArchFamily::Other},
    {"tcn", ArchFamily::Other},
    {"idle", ArchFamily::Other},
}};

}  // namespace

std::string_view to_string(ArchFamily f) {
  switch (f) {
    case ArchFamily::Cnn: return "CNN";
    case ArchFamily::Rnn: return "RNN";
    case ArchFamily::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(TargetClass t) {
  return t == TargetClass::Cnn ? "cnn" : "rnn";
}

ArchFamily parse_family(std::string_view s) {
  if (s == "CNN" || s == "cnn") return ArchFamily::Cnn;
  if (s == "RNN" || s == "rnn") return ArchFamily::Rnn;
  if (s == "Other" || s == "other") return ArchFamily::Other;
  throw Error(ErrorKind::InvalidConfig, "unknown architecture family '" + std::string(s) + "'");
}

TargetClass parse_target(std::string_view s) {
  if (s == "cnn" || s == "CNN") return TargetClass::Cnn;
  if (s == "rnn" || s == "RNN") return TargetClass::Rnn;
  throw Error(ErrorKind::InvalidConfig, "unknown target class '" + std::string(s) + "'");
}

std::optional<ArchFamily> registry_family(std::string_view model_name) {
  for (const auto& [name, family] : kRegistry)
    if (name == model_name) return family;
  return std::nullopt;
}

void ArchLabel::validate() const {
  if (auto f = registry_family(model_name); f && *f != family)
    throw Error(ErrorKind::InvalidConfig,
                "model '" + model_name + "' is registered as " + std::string(to_string(*f)) +
                    ", label says " + std::string(to_string(family)));
}

ArchLabel make_label(std::string_view model_name, std::string_view dataset_name) {
  auto f = registry_family(model_name);
  if (!f) throw Error(ErrorKind::UnknownModelName, "no registry entry for '" + std::string(model_name) + "'");
  ArchLabel label;
  label.family = *f;
  label.model_name = model_name;
  label.dataset_name = dataset_name;
  return label;
}

}  // namespace flare
