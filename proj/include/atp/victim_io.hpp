#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "atp/victim.hpp"

namespace atp {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = std::move(data);
  return j;
}

inline Mat mat_from_json(const nlohmann::json& j) {
  Mat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto& data = j.at("data");
  if (data.size() != m.size()) throw std::runtime_error("checkpoint: matrix size mismatch");
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = data[i].get<double>();
  return m;
}

}  // namespace detail

inline nlohmann::json victim_to_json(const ToyVictim& v) {
  nlohmann::json j;
  j["format"] = "atp-victim";
  j["version"] = kCheckpointVersion;
  j["config"] = {{"d", v.cfg.d}, {"d_ff", v.cfg.d_ff}, {"l_cell", v.cfg.l_cell}, {"p_max", v.cfg.p_max}};
  j["vocab"] = v.vocab.tokens();
  nlohmann::json params;
  const char* names[] = {"tok_emb", "pos_emb", "wq", "wk", "wv", "wo", "w1", "w2", "w_out"};
  auto list = v.params();
  for (std::size_t i = 0; i < list.size(); ++i) params[names[i]] = detail::mat_to_json(*list[i]);
  j["params"] = std::move(params);
  return j;
}

inline ToyVictim victim_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != std::string("atp-victim"))
    throw std::runtime_error("checkpoint: unrecognized format tag");
  if (j.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  ToyVictim v;
  const auto& c = j.at("config");
  v.cfg.d = c.at("d").get<std::size_t>();
  v.cfg.d_ff = c.at("d_ff").get<std::size_t>();
  v.cfg.l_cell = c.at("l_cell").get<std::size_t>();
  v.cfg.p_max = c.at("p_max").get<std::size_t>();
  v.vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  const auto& params = j.at("params");
  v.tok_emb = detail::mat_from_json(params.at("tok_emb"));
  v.pos_emb = detail::mat_from_json(params.at("pos_emb"));
  v.wq = detail::mat_from_json(params.at("wq"));
  v.wk = detail::mat_from_json(params.at("wk"));
  v.wv = detail::mat_from_json(params.at("wv"));
  v.wo = detail::mat_from_json(params.at("wo"));
  v.w1 = detail::mat_from_json(params.at("w1"));
  v.w2 = detail::mat_from_json(params.at("w2"));
  v.w_out = detail::mat_from_json(params.at("w_out"));
  return v;
}

inline void save_victim(const ToyVictim& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_victim: cannot open " + path);
  out << victim_to_json(v).dump();
  out << '\n';
  if (!out) throw std::runtime_error("save_victim: write failed for " + path);
}

inline ToyVictim load_victim(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_victim: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return victim_from_json(j);
}

}  // namespace atp
