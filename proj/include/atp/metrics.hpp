#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>

#include "atp/tokenizer.hpp"

namespace atp {

enum class MetricKind { kJudge, kContainment };

struct MetricScore {
  double value = 0.0;
  MetricKind kind = MetricKind::kContainment;
};

// Lowercase, punctuation to spaces, whitespace collapsed.
inline std::string normalize_answer(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

// Offline stand-in for the judge: 1.0 when the normalized reference appears
// in the normalized response (on token boundaries), otherwise token-level F1.
inline MetricScore containment_score(std::string_view reference, std::string_view response) {
  const std::string ref = normalize_answer(reference);
  const std::string resp = normalize_answer(response);
  MetricScore score{0.0, MetricKind::kContainment};
  if (ref.empty()) {
    score.value = 1.0;
    return score;
  }
  const std::string padded_resp = " " + resp + " ";
  if (padded_resp.find(" " + ref + " ") != std::string::npos) {
    score.value = 1.0;
    return score;
  }
  std::map<std::string, int> ref_counts;
  int ref_total = 0;
  for (const auto& tok : tokenize(ref)) {
    ++ref_counts[tok];
    ++ref_total;
  }
  int overlap = 0, resp_total = 0;
  for (const auto& tok : tokenize(resp)) {
    ++resp_total;
    auto it = ref_counts.find(tok);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0 || resp_total == 0) return score;
  const double precision = static_cast<double>(overlap) / resp_total;
  const double recall = static_cast<double>(overlap) / ref_total;
  score.value = 2.0 * precision * recall / (precision + recall);
  return score;
}

}  // namespace atp
