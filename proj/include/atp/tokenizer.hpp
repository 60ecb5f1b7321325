#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace atp {

// Lowercasing whitespace + punctuation tokenizer: runs of [a-z0-9] become one
// token, every other non-space character stands alone ("62,202" -> 62 , 202).
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string run;
  auto flush = [&out, &run]() {
    if (!run.empty()) {
      out.push_back(run);
      run.clear();
    }
  };
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      run += static_cast<char>(std::tolower(c));
    } else {
      flush();
      if (!std::isspace(c)) out.push_back(std::string(1, ch));
    }
  }
  flush();
  return out;
}

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kEos = 2;

  Vocab() {
    add("<pad>");
    add("<unk>");
    add("<eos>");
  }

  int add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
  }

  void add_text(std::string_view text) {
    for (const auto& tok : tokenize(text)) add(tok);
  }

  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<int> encode(std::string_view text) const {
    std::vector<int> ids;
    for (const auto& tok : tokenize(text)) ids.push_back(id(tok));
    return ids;
  }

  std::string decode(const std::vector<int>& ids) const {
    std::string out;
    for (int t : ids) {
      if (t == kEos || t == kPad) continue;
      if (!out.empty()) out += ' ';
      out += token(t);
    }
    return out;
  }

  static Vocab from_tokens(const std::vector<std::string>& id_to_token) {
    Vocab v;
    v.id_to_token_.clear();
    v.token_to_id_.clear();
    for (const auto& t : id_to_token) v.add(t);
    return v;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace atp
