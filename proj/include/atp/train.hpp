#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "atp/adam.hpp"
#include "atp/victim.hpp"

namespace atp {

struct TrainConfig {
  int max_epochs = 300;
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double target_ce = 0.05;  // stop once the epoch mean CE drops below this
  VictimConfig victim;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ToyVictim victim;
  int epochs_run = 0;
  double final_mean_ce = std::numeric_limits<double>::quiet_NaN();
  double best_mean_ce = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Teacher-forced cross-entropy over canonical-order linearizations, one Adam
// step per example. Returns the best checkpoint seen; non-convergence within
// max_epochs is reported through `converged`.
inline TrainResult train_toy_victim(const std::vector<TqaExample>& corpus, const TrainConfig& cfg,
                                    Rng& rng) {
  if (corpus.empty()) throw std::invalid_argument("train_toy_victim: empty corpus");

  Vocab vocab;
  for (const auto& ex : corpus) {
    for (const auto& h : ex.table.header) vocab.add_text(h);
    for (const auto& row : ex.table.rows)
      for (const auto& cell : row) vocab.add_text(cell);
    vocab.add_text(ex.question);
    vocab.add_text(ex.answer);
  }

  TrainResult result;
  result.victim = ToyVictim::init(cfg.victim, std::move(vocab), rng);
  ToyVictim& v = result.victim;

  std::vector<EncodedExample> encoded;
  encoded.reserve(corpus.size());
  for (const auto& ex : corpus) encoded.push_back(encode_example(v, ex));

  const AdamParams hp{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  std::vector<Mat*> params = v.params();
  std::vector<AdamState> states;
  states.reserve(params.size());
  for (Mat* p : params) states.push_back(AdamState::like(*p));

  std::vector<Mat> best_params;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      EncodedExample& ex = encoded[idx];
      // Cell blocks read the live embedding table, so refresh them.
      for (std::size_t c = 0; c < ex.grid.n_cells(); ++c)
        for (std::size_t k = 0; k < ex.grid.l_cell; ++k) {
          const int tok = ex.grid.tok[c][k];
          if (tok < 0) continue;
          for (std::size_t e = 0; e < ex.grid.dim; ++e)
            ex.grid.emb[c](k, e) = v.tok_emb(static_cast<std::size_t>(tok), e);
        }
      const ForwardTape tape = forward_loss(v, identity_input(ex));
      epoch_loss += tape.loss / static_cast<double>(ex.answer.size());
      ParamGrads pg = ParamGrads::zeros_like(v);
      backward_params(v, tape, ex.grid, &pg);
      std::vector<Mat*> grads = pg.list();
      for (std::size_t p = 0; p < params.size(); ++p)
        adam_step(*params[p], *grads[p], states[p], hp, /*ascent=*/false);
      for (std::size_t e = 0; e < cfg.victim.d; ++e) v.tok_emb(Vocab::kPad, e) = 0.0;
    }
    result.epochs_run = epoch + 1;
    result.final_mean_ce = epoch_loss / static_cast<double>(corpus.size());
    if (result.final_mean_ce < result.best_mean_ce) {
      result.best_mean_ce = result.final_mean_ce;
      best_params.clear();
      for (Mat* p : params) best_params.push_back(*p);
    }
    if (result.final_mean_ce < cfg.target_ce) {
      result.converged = true;
      break;
    }
  }
  if (!best_params.empty()) {
    for (std::size_t p = 0; p < params.size(); ++p) *params[p] = best_params[p];
  }
  return result;
}

}  // namespace atp
