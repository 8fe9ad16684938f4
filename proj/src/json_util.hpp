#pragma once

// Internal JSON helpers shared by the training and harness translation units.

#include "fairsan/evaluators.hpp"
#include "json.hpp"

namespace fairsan {

inline nlohmann::ordered_json probe_to_json(const ProbeConfig& p) {
  return {{"mlp_hidden", p.mlp_hidden},
          {"mlp_epochs", p.mlp_epochs},
          {"mlp_batch", p.mlp_batch},
          {"mlp_lr", p.mlp_lr},
          {"gb_rounds", p.gb_rounds},
          {"gb_learning_rate", p.gb_learning_rate},
          {"hinge_lambda", p.hinge_lambda},
          {"hinge_iterations", p.hinge_iterations}};
}

inline ProbeConfig probe_from_json(const nlohmann::ordered_json& j) {
  ProbeConfig p;
  p.mlp_hidden = j.at("mlp_hidden").get<std::vector<std::size_t>>();
  p.mlp_epochs = j.at("mlp_epochs").get<int>();
  p.mlp_batch = j.at("mlp_batch").get<std::size_t>();
  p.mlp_lr = j.at("mlp_lr").get<double>();
  p.gb_rounds = j.at("gb_rounds").get<int>();
  p.gb_learning_rate = j.at("gb_learning_rate").get<double>();
  p.hinge_lambda = j.at("hinge_lambda").get<double>();
  p.hinge_iterations = j.at("hinge_iterations").get<int>();
  return p;
}

}  // namespace fairsan
