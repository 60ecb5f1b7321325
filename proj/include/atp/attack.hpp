#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "atp/adam.hpp"
#include "atp/assignment.hpp"
#include "atp/sinkhorn.hpp"
#include "atp/victim.hpp"

namespace atp {

enum class AttackObjective { kCrossEntropy, kKlDivergence };
enum class AttackMode { kJoint, kRowOnly, kColOnly };

struct AtpConfig {
  int n_attack = 20;
  double lambda1 = 10.0;
  double lambda2 = 10.0;
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int n_sink = 20;
  double theta_init_scale = 0.1;
  AttackObjective objective = AttackObjective::kCrossEntropy;
  AttackMode mode = AttackMode::kJoint;
  PositionMode pos_mode = PositionMode::kSerializedOrder;
  std::uint64_t seed = 0;
  std::size_t max_generate_tokens = 8;

  void validate() const {
    if (n_attack < 1) throw std::invalid_argument("AtpConfig: n_attack must be >= 1");
    if (lambda1 < 0 || lambda2 < 0) throw std::invalid_argument("AtpConfig: lambdas must be >= 0");
    if (learning_rate < 0) throw std::invalid_argument("AtpConfig: learning_rate must be >= 0");
    if (n_sink < 1) throw std::invalid_argument("AtpConfig: n_sink must be >= 1");
  }
};

struct AttackResult {
  RowPerm row_perm;
  ColPerm col_perm;
  std::vector<double> loss_trajectory;  // objective value per iteration
  double clean_loss = 0.0;
  double attacked_loss = 0.0;
  std::string clean_generation;
  std::string attacked_generation;
  double entropy_r_final = 0.0;
  double entropy_c_final = 0.0;
  double fitness = 0.0;  // scorer value of the chosen candidate (search baselines)
  int scorer_calls = 0;
  bool no_op = false;
};

// Gradient of <grad_mixed, mixed> with respect to the two mixing matrices,
// where mixed(i,j) = sum_{si,sj} d_r(i,si) d_c(sj,j) emb(si,sj).
inline void mix_soft_backward(const CellGridInput& in, const Mat& d_r, const Mat& d_c,
                              const std::vector<Mat>& grad_mixed, Mat* grad_d_r, Mat* grad_d_c) {
  const std::size_t R = in.grid_rows, C = in.grid_cols;
  *grad_d_r = Mat(R, R, 0.0);
  *grad_d_c = Mat(C, C, 0.0);
  // dot(i,j,si,sj) = <grad_mixed(i,j), emb(si,sj)>
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      const Mat& g = grad_mixed[in.cell_index(i, j)];
      for (std::size_t si = 0; si < R; ++si) {
        for (std::size_t sj = 0; sj < C; ++sj) {
          const Mat& e = in.emb[in.cell_index(si, sj)];
          double dot = 0.0;
          for (std::size_t t = 0; t < g.size(); ++t) dot += g.data()[t] * e.data()[t];
          (*grad_d_r)(i, si) += d_c(sj, j) * dot;
          (*grad_d_c)(sj, j) += d_r(i, si) * dot;
        }
      }
    }
  }
}

struct ObjectiveEval {
  double value = 0.0;  // task loss - lambda1 H(D_r) - lambda2 H(D_c)
  double loss = 0.0;   // the task term alone (CE or KL)
  double entropy_r = 0.0;
  double entropy_c = 0.0;
  Mat grad_theta_r;  // ascent gradients of `value`
  Mat grad_theta_c;
  RowPerm hard_rows;
  ColPerm hard_cols;
};

// Reference for the label-free objective: the victim's own greedy generation
// under the identity layout, together with its teacher-forced next-token
// distributions on that sequence.
struct KlReference {
  std::vector<int> tokens;
  Mat probs;  // tokens.size() x V
};

inline KlReference make_kl_reference(const ToyVictim& victim, const EncodedExample& ex,
                                     std::size_t max_tokens) {
  KlReference ref;
  const PermutedInput clean = identity_input(ex);
  ref.tokens = generate_ids(victim, clean, max_tokens);
  if (ref.tokens.empty() || ref.tokens.back() != Vocab::kEos) ref.tokens.push_back(Vocab::kEos);
  const ForwardTape tape = forward_loss(victim, PermutedInput{ex.grid, ex.question, ref.tokens});
  ref.probs = Mat(tape.logits.rows(), tape.logits.cols());
  for (std::size_t i = 0; i < tape.logits.rows(); ++i) {
    double mx = tape.logits(i, 0);
    for (std::size_t j = 1; j < tape.logits.cols(); ++j) mx = std::max(mx, tape.logits(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < tape.logits.cols(); ++j) z += std::exp(tape.logits(i, j) - mx);
    for (std::size_t j = 0; j < tape.logits.cols(); ++j)
      ref.probs(i, j) = std::exp(tape.logits(i, j) - mx) / z;
  }
  return ref;
}

// sum_t KL(p_t || softmax(logits_t)); zero iff the rows match.
inline double kl_divergence_rows(const Mat& ref_probs, const Mat& logits) {
  ref_probs.require_same_shape(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) z += std::exp(logits(i, j) - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double p = ref_probs(i, j);
      if (p <= 0.0) continue;
      total += p * (std::log(p) - (logits(i, j) - log_z));
    }
  }
  return total;
}

namespace detail {

struct AttackFactors {
  Mat s_r;  // n x n soft data-row factor
  Mat d_r;  // lifted (n+1) x (n+1)
  Mat d_c;  // m x m
};

inline AttackFactors make_factors(const Mat& theta_r, const Mat& theta_c, int n_sink) {
  AttackFactors f;
  f.s_r = theta_r.rows() > 0 ? sinkhorn(theta_r, n_sink) : Mat(0, 0);
  f.d_r = lift_header_fixed(f.s_r);
  f.d_c = sinkhorn(theta_c, n_sink);
  return f;
}

// Shared body of the two objectives; `ref` selects the label-free variant.
inline ObjectiveEval objective_eval(const ToyVictim& victim, const EncodedExample& ex,
                                    const Mat& theta_r, const Mat& theta_c, const AtpConfig& cfg,
                                    const KlReference* ref) {
  const std::size_t n = ex.grid.grid_rows - 1, m = ex.grid.grid_cols;
  if (theta_r.rows() != n || theta_r.cols() != n || theta_c.rows() != m || theta_c.cols() != m)
    throw std::invalid_argument("atp objective: theta shapes do not match the table");

  const AttackFactors f = make_factors(theta_r, theta_c, cfg.n_sink);

  ObjectiveEval out;
  out.hard_rows = row_perm_from_lifted(f.d_r);
  out.hard_cols = col_perm_from_matrix(f.d_c);
  out.entropy_r = matrix_entropy(f.d_r);
  out.entropy_c = matrix_entropy(f.d_c);

  CellGridInput mixed = mix_soft(ex.grid, f.d_r, f.d_c, cfg.pos_mode);
  const std::vector<int>& answer = ref ? ref->tokens : ex.answer;
  const ForwardTape tape = forward_loss(victim, PermutedInput{std::move(mixed), ex.question, answer});

  Mat dlogits;
  if (ref) {
    out.loss = kl_divergence_rows(ref->probs, tape.logits);
    dlogits = Mat(tape.logits.rows(), tape.logits.cols());
    for (std::size_t i = 0; i < tape.logits.rows(); ++i) {
      double mx = tape.logits(i, 0);
      for (std::size_t j = 1; j < tape.logits.cols(); ++j) mx = std::max(mx, tape.logits(i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < tape.logits.cols(); ++j) z += std::exp(tape.logits(i, j) - mx);
      for (std::size_t j = 0; j < tape.logits.cols(); ++j)
        dlogits(i, j) = std::exp(tape.logits(i, j) - mx) / z - ref->probs(i, j);
    }
  } else {
    out.loss = tape.loss;
    dlogits = ce_dlogits(tape);
  }
  out.value = out.loss - cfg.lambda1 * out.entropy_r - cfg.lambda2 * out.entropy_c;

  std::vector<Mat> grad_mixed;
  backward(victim, tape, dlogits, &grad_mixed, nullptr);

  Mat grad_d_r, grad_d_c;
  mix_soft_backward(ex.grid, f.d_r, f.d_c, grad_mixed, &grad_d_r, &grad_d_c);

  // value = loss - lambda H; dH/dD = entropy_grad, so d(value)/dD picks up
  // -lambda * entropy_grad on top of the task gradient.
  Mat grad_s_r(n, n);
  if (n > 0) {
    const Mat ent_r = entropy_grad(f.s_r);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        grad_s_r(i, j) = grad_d_r(i + 1, j + 1) - cfg.lambda1 * ent_r(i, j);
  }
  Mat grad_d_c_total = grad_d_c;
  {
    const Mat ent_c = entropy_grad(f.d_c);
    for (std::size_t i = 0; i < grad_d_c_total.size(); ++i)
      grad_d_c_total.data()[i] -= cfg.lambda2 * ent_c.data()[i];
  }
  out.grad_theta_r = n > 0 ? sinkhorn_backward(theta_r, cfg.n_sink, grad_s_r) : Mat(0, 0);
  out.grad_theta_c = sinkhorn_backward(theta_c, cfg.n_sink, grad_d_c_total);
  return out;
}

inline Mat strong_diagonal(std::size_t n, double value = 20.0) {
  Mat m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = value;
  return m;
}

}  // namespace detail

// Cross-entropy attack objective (gradient ascent direction): the victim loss
// under the hybrid-permuted input minus the entropy penalties. Gradients flow
// through the soft mixing path only; the projections are held fixed.
inline ObjectiveEval atp_objective(const ToyVictim& victim, const EncodedExample& ex,
                                   const Mat& theta_r, const Mat& theta_c, const AtpConfig& cfg) {
  return detail::objective_eval(victim, ex, theta_r, theta_c, cfg, nullptr);
}

// Label-free variant: maximizes the KL divergence between the clean-branch
// next-token distributions (over the victim's own clean greedy generation)
// and the permuted-branch distributions.
inline ObjectiveEval kl_objective(const ToyVictim& victim, const EncodedExample& ex,
                                  const Mat& theta_r, const Mat& theta_c, const AtpConfig& cfg) {
  const KlReference ref = make_kl_reference(victim, ex, cfg.max_generate_tokens);
  return detail::objective_eval(victim, ex, theta_r, theta_c, cfg, &ref);
}

inline AttackResult run_atp(const ToyVictim& victim, const TqaExample& example,
                            const AtpConfig& cfg) {
  cfg.validate();
  const EncodedExample ex = encode_example(victim, example);
  const std::size_t n = ex.grid.grid_rows - 1, m = ex.grid.grid_cols;

  AttackResult result;
  {
    const ForwardTape clean = forward_loss(victim, identity_input(ex));
    result.clean_loss = clean.loss;
    result.clean_generation = generate(victim, identity_input(ex), cfg.max_generate_tokens);
  }
  result.no_op = (n <= 1 && m <= 1);

  Rng rng(cfg.seed);
  std::normal_distribution<double> init(0.0, cfg.theta_init_scale);
  Mat theta_r(n, n), theta_c(m, m);
  for (std::size_t i = 0; i < theta_r.size(); ++i) theta_r.data()[i] = init(rng);
  for (std::size_t i = 0; i < theta_c.size(); ++i) theta_c.data()[i] = init(rng);
  const bool update_rows = cfg.mode != AttackMode::kColOnly;
  const bool update_cols = cfg.mode != AttackMode::kRowOnly;
  if (!update_rows) theta_r = detail::strong_diagonal(n);
  if (!update_cols) theta_c = detail::strong_diagonal(m);

  KlReference ref;
  const bool use_kl = cfg.objective == AttackObjective::kKlDivergence;
  if (use_kl) ref = make_kl_reference(victim, ex, cfg.max_generate_tokens);

  const AdamParams hp{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  AdamState state_r = AdamState::like(theta_r);
  AdamState state_c = AdamState::like(theta_c);

  result.loss_trajectory.reserve(static_cast<std::size_t>(cfg.n_attack));
  for (int it = 0; it < cfg.n_attack; ++it) {
    const ObjectiveEval eval =
        detail::objective_eval(victim, ex, theta_r, theta_c, cfg, use_kl ? &ref : nullptr);
    result.loss_trajectory.push_back(eval.value);
    if (update_rows && n > 1) adam_step(theta_r, eval.grad_theta_r, state_r, hp, /*ascent=*/true);
    if (update_cols && m > 1) adam_step(theta_c, eval.grad_theta_c, state_c, hp, /*ascent=*/true);
  }

  const detail::AttackFactors f = detail::make_factors(theta_r, theta_c, cfg.n_sink);
  result.entropy_r_final = matrix_entropy(f.d_r);
  result.entropy_c_final = matrix_entropy(f.d_c);
  result.row_perm = row_perm_from_lifted(f.d_r);
  result.col_perm = col_perm_from_matrix(f.d_c);

  const PermutedInput attacked =
      hard_permuted_input(ex, result.row_perm, result.col_perm, cfg.pos_mode);
  result.attacked_loss = forward_loss(victim, attacked).loss;
  result.attacked_generation = generate(victim, attacked, cfg.max_generate_tokens);
  result.fitness = result.attacked_loss;
  return result;
}

}  // namespace atp
