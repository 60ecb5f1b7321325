#pragma once

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>

#include "atp/metrics.hpp"
#include "atp/remote.hpp"

namespace atp {

// The judge never sees the table, only the question and the two answers.
struct JudgeRequest {
  std::string question;
  std::string reference_answer;
  std::string assistant_answer;
};

inline std::string build_judge_prompt(const JudgeRequest& req) {
  return "You are a text analyzer to analyze to what extent the assistant answer is aligned "
         "with the reference answer.\n"
         "\n"
         "Question: " + req.question + ".\n"
         "Reference answer: " + req.reference_answer + ".\n"
         "Assistant answer: " + req.assistant_answer + ".\n"
         "\n"
         "Please provide a score ranging from 0 to 1, where 1 represents perfect alignment and "
         "0 represents no alignment at all. The final answer should contain the score only.";
}

// First real number in [0, 1] found in the reply. Judges are told to answer
// with the bare score, but real replies often wrap it in prose.
inline double parse_judge_score(const std::string& reply) {
  bool saw_number = false;
  std::size_t i = 0;
  while (i < reply.size()) {
    const bool digit = std::isdigit(static_cast<unsigned char>(reply[i]));
    const bool dot_start = reply[i] == '.' && i + 1 < reply.size() &&
                           std::isdigit(static_cast<unsigned char>(reply[i + 1]));
    if (!digit && !dot_start) {
      ++i;
      continue;
    }
    std::size_t end = i;
    bool seen_dot = false;
    while (end < reply.size() &&
           (std::isdigit(static_cast<unsigned char>(reply[end])) ||
            (reply[end] == '.' && !seen_dot))) {
      if (reply[end] == '.') seen_dot = true;
      ++end;
    }
    const std::string token = reply.substr(i, end - i);
    if (token != ".") {
      saw_number = true;
      const double value = std::stod(token);
      if (value >= 0.0 && value <= 1.0) return value;
    }
    i = end;
  }
  throw std::runtime_error(saw_number ? "judge reply has no number in [0, 1]: " + reply
                                      : "judge reply contains no number: " + reply);
}

inline MetricScore judge_score(ChatClient& client, const JudgeRequest& req) {
  const std::string reply = client.generate(build_judge_prompt(req));
  return MetricScore{parse_judge_score(reply), MetricKind::kJudge};
}

}  // namespace atp
