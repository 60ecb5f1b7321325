#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "atp/attack.hpp"

namespace atp {

inline std::string to_string(AttackObjective o) {
  return o == AttackObjective::kCrossEntropy ? "ce" : "kl";
}
inline std::string to_string(AttackMode m) {
  switch (m) {
    case AttackMode::kJoint: return "row-and-col";
    case AttackMode::kRowOnly: return "row";
    case AttackMode::kColOnly: return "col";
  }
  return "row-and-col";
}
inline std::string to_string(PositionMode m) {
  return m == PositionMode::kSerializedOrder ? "serialized" : "carry";
}

inline AttackObjective objective_from_string(const std::string& s) {
  if (s == "ce") return AttackObjective::kCrossEntropy;
  if (s == "kl") return AttackObjective::kKlDivergence;
  throw std::invalid_argument("unknown objective '" + s + "' (expected ce|kl)");
}
inline AttackMode mode_from_string(const std::string& s) {
  if (s == "row") return AttackMode::kRowOnly;
  if (s == "col") return AttackMode::kColOnly;
  if (s == "row-and-col") return AttackMode::kJoint;
  throw std::invalid_argument("unknown mode '" + s + "' (expected row|col|row-and-col)");
}
inline PositionMode position_mode_from_string(const std::string& s) {
  if (s == "serialized") return PositionMode::kSerializedOrder;
  if (s == "carry") return PositionMode::kCarryOriginal;
  throw std::invalid_argument("unknown position mode '" + s + "' (expected serialized|carry)");
}

// Config-file keys match the field names one-to-one.
inline nlohmann::json atp_config_to_json(const AtpConfig& c) {
  return nlohmann::json{{"n_attack", c.n_attack},
                        {"lambda1", c.lambda1},
                        {"lambda2", c.lambda2},
                        {"learning_rate", c.learning_rate},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"epsilon", c.epsilon},
                        {"n_sink", c.n_sink},
                        {"theta_init_scale", c.theta_init_scale},
                        {"objective", to_string(c.objective)},
                        {"mode", to_string(c.mode)},
                        {"pos_mode", to_string(c.pos_mode)},
                        {"seed", c.seed},
                        {"max_generate_tokens", c.max_generate_tokens}};
}

inline AtpConfig atp_config_from_json(const nlohmann::json& j) {
  AtpConfig c;
  c.n_attack = j.value("n_attack", c.n_attack);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.n_sink = j.value("n_sink", c.n_sink);
  c.theta_init_scale = j.value("theta_init_scale", c.theta_init_scale);
  if (j.contains("objective")) c.objective = objective_from_string(j.at("objective"));
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode"));
  if (j.contains("pos_mode")) c.pos_mode = position_mode_from_string(j.at("pos_mode"));
  c.seed = j.value("seed", c.seed);
  c.max_generate_tokens = j.value("max_generate_tokens", c.max_generate_tokens);
  c.validate();
  return c;
}

inline AtpConfig load_atp_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_atp_config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return atp_config_from_json(j);
}

}  // namespace atp
