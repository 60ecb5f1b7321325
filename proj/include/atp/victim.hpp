#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "atp/assignment.hpp"
#include "atp/matrix.hpp"
#include "atp/perm.hpp"
#include "atp/sinkhorn.hpp"
#include "atp/table.hpp"
#include "atp/tokenizer.hpp"

namespace atp {

struct VictimConfig {
  std::size_t d = 32;
  std::size_t d_ff = 64;
  std::size_t l_cell = 8;
  std::size_t p_max = 512;
};

// How position ids are assigned after a permutation. Serialized order mirrors
// re-serializing the rearranged table (ids are the row-major ramp of the new
// layout); carry keeps each cell's original ids attached to it.
enum class PositionMode { kSerializedOrder, kCarryOriginal };

// Per-cell blocks of token embeddings, position ids and attention masks.
// Row 0 of the grid is the header row. Pad slots have zero embedding rows
// and att = 0. `tok` keeps the source token ids (-1 for pads and for blocks
// produced by soft mixing); training uses it to route embedding gradients.
struct CellGridInput {
  std::size_t grid_rows = 0;  // n + 1
  std::size_t grid_cols = 0;  // m
  std::size_t l_cell = 0;
  std::size_t dim = 0;
  std::vector<Mat> emb;
  std::vector<std::vector<int>> pos;
  std::vector<std::vector<std::uint8_t>> att;
  std::vector<std::vector<int>> tok;

  std::size_t cell_index(std::size_t i, std::size_t j) const { return i * grid_cols + j; }
  std::size_t n_cells() const { return grid_rows * grid_cols; }
  std::size_t table_tokens() const { return grid_rows * grid_cols * l_cell; }

  bool same_shape(const CellGridInput& o) const {
    return grid_rows == o.grid_rows && grid_cols == o.grid_cols && l_cell == o.l_cell &&
           dim == o.dim;
  }
};

struct PermutedInput {
  CellGridInput grid;
  std::vector<int> question;
  std::vector<int> answer;  // teacher-forced targets
};

// One attention layer, one head, learned absolute position embeddings, a
// tanh feed-forward block, residual connections, tied nothing. Small enough
// that every gradient can be checked by finite differences on a CPU.
struct ToyVictim {
  VictimConfig cfg;
  Vocab vocab;
  Mat tok_emb;  // V x d, row kPad pinned to zero
  Mat pos_emb;  // p_max x d
  Mat wq, wk, wv, wo;  // d x d
  Mat w1;              // d x d_ff
  Mat w2;              // d_ff x d
  Mat w_out;           // d x V

  static ToyVictim init(const VictimConfig& cfg, Vocab vocab, Rng& rng) {
    ToyVictim v;
    v.cfg = cfg;
    v.vocab = std::move(vocab);
    std::normal_distribution<double> dist(0.0, 0.1);
    auto randinit = [&](std::size_t r, std::size_t c) {
      Mat m(r, c);
      for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
      return m;
    };
    v.tok_emb = randinit(v.vocab.size(), cfg.d);
    for (std::size_t j = 0; j < cfg.d; ++j) v.tok_emb(Vocab::kPad, j) = 0.0;
    v.pos_emb = randinit(cfg.p_max, cfg.d);
    v.wq = randinit(cfg.d, cfg.d);
    v.wk = randinit(cfg.d, cfg.d);
    v.wv = randinit(cfg.d, cfg.d);
    v.wo = randinit(cfg.d, cfg.d);
    v.w1 = randinit(cfg.d, cfg.d_ff);
    v.w2 = randinit(cfg.d_ff, cfg.d);
    v.w_out = randinit(cfg.d, v.vocab.size());
    return v;
  }

  std::vector<Mat*> params() {
    return {&tok_emb, &pos_emb, &wq, &wk, &wv, &wo, &w1, &w2, &w_out};
  }
  std::vector<const Mat*> params() const {
    return {&tok_emb, &pos_emb, &wq, &wk, &wv, &wo, &w1, &w2, &w_out};
  }
};

inline std::vector<int> truncate_tokens(std::vector<int> ids, std::size_t l_cell) {
  if (ids.size() > l_cell) ids.resize(l_cell);
  return ids;
}

// Turn a table into position-aligned cell blocks. Cells tokenizing past
// l_cell are truncated; pads fill the rest with zero embeddings and att = 0.
// Position ids run in row-major serialized order of the given layout.
inline CellGridInput encode_table(const ToyVictim& victim, const Table& table) {
  table.validate();
  CellGridInput g;
  g.grid_rows = table.n_rows() + 1;
  g.grid_cols = table.n_cols();
  g.l_cell = victim.cfg.l_cell;
  g.dim = victim.cfg.d;
  g.emb.reserve(g.n_cells());
  auto encode_cell = [&](const std::string& text, std::size_t cell) {
    const std::vector<int> ids = truncate_tokens(victim.vocab.encode(text), g.l_cell);
    Mat block(g.l_cell, g.dim, 0.0);
    std::vector<int> pos(g.l_cell);
    std::vector<std::uint8_t> att(g.l_cell, 0);
    std::vector<int> tok(g.l_cell, -1);
    for (std::size_t k = 0; k < g.l_cell; ++k) pos[k] = static_cast<int>(cell * g.l_cell + k);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      for (std::size_t c = 0; c < g.dim; ++c) block(k, c) = victim.tok_emb(ids[k], c);
      att[k] = 1;
      tok[k] = ids[k];
    }
    g.emb.push_back(std::move(block));
    g.pos.push_back(std::move(pos));
    g.att.push_back(std::move(att));
    g.tok.push_back(std::move(tok));
  };
  std::size_t cell = 0;
  for (std::size_t j = 0; j < g.grid_cols; ++j, ++cell) encode_cell(table.header[j], cell);
  for (std::size_t i = 0; i < table.n_rows(); ++i)
    for (std::size_t j = 0; j < g.grid_cols; ++j, ++cell) encode_cell(table.rows[i][j], cell);
  return g;
}

struct EncodedExample {
  CellGridInput grid;
  std::vector<int> question;
  std::vector<int> answer;  // ground-truth tokens followed by <eos>
};

inline EncodedExample encode_example(const ToyVictim& victim, const TqaExample& ex) {
  ex.validate();
  EncodedExample out;
  out.grid = encode_table(victim, ex.table);
  out.question = victim.vocab.encode(ex.question);
  out.answer = victim.vocab.encode(ex.answer);
  out.answer.push_back(Vocab::kEos);
  const std::size_t total = out.grid.table_tokens() + out.question.size() + out.answer.size();
  if (total > victim.cfg.p_max)
    throw std::invalid_argument("encode_example: sequence exceeds p_max positions");
  return out;
}

namespace detail {

inline void regenerate_serialized_positions(CellGridInput& g) {
  for (std::size_t c = 0; c < g.n_cells(); ++c)
    for (std::size_t k = 0; k < g.l_cell; ++k) g.pos[c][k] = static_cast<int>(c * g.l_cell + k);
}

}  // namespace detail

// Rearrange all grids by hard permutations; the header row stays put.
// Multisets of blocks are preserved by construction.
inline CellGridInput apply_hard(const CellGridInput& in, const RowPerm& row_perm,
                                const ColPerm& col_perm,
                                PositionMode mode = PositionMode::kSerializedOrder) {
  if (row_perm.size() + 1 != in.grid_rows || col_perm.size() != in.grid_cols)
    throw std::invalid_argument("apply_hard: permutation size does not match grid");
  if (!is_permutation(row_perm) || !is_permutation(col_perm))
    throw std::invalid_argument("apply_hard: mapping is not a bijection");
  CellGridInput out = in;
  for (std::size_t i = 0; i < in.grid_rows; ++i) {
    const std::size_t src_i = (i == 0) ? 0 : 1 + row_perm[i - 1];
    for (std::size_t j = 0; j < in.grid_cols; ++j) {
      const std::size_t src = in.cell_index(src_i, col_perm[j]);
      const std::size_t dst = out.cell_index(i, j);
      out.emb[dst] = in.emb[src];
      out.pos[dst] = in.pos[src];
      out.att[dst] = in.att[src];
      out.tok[dst] = in.tok[src];
    }
  }
  if (mode == PositionMode::kSerializedOrder) detail::regenerate_serialized_positions(out);
  return out;
}

// The soft row factor left-multiplies the grid, so its projection is already
// in gather form. The column factor right-multiplies: slot j of the result
// collects source column sj with weight d_c(sj, j), so the gather mapping is
// the inverse of the projected matrix's row form.
inline RowPerm row_perm_from_lifted(const Mat& d_r) {
  if (d_r.rows() < 1) throw std::invalid_argument("row_perm_from_lifted: empty matrix");
  Mat inner(d_r.rows() - 1, d_r.rows() - 1);
  for (std::size_t i = 1; i < d_r.rows(); ++i)
    for (std::size_t j = 1; j < d_r.rows(); ++j) inner(i - 1, j - 1) = d_r(i, j);
  return project_to_permutation(inner);
}

inline ColPerm col_perm_from_matrix(const Mat& d_c) {
  return inverse(project_to_permutation(d_c));
}

// Hybrid application: embeddings are mixed by the soft matrices, while
// position ids and attention masks follow the hard projections of those
// matrices. d_r covers the full grid including the pinned header row.
inline CellGridInput mix_soft(const CellGridInput& in, const Mat& d_r, const Mat& d_c,
                              PositionMode mode = PositionMode::kSerializedOrder) {
  if (d_r.rows() != in.grid_rows || d_c.rows() != in.grid_cols)
    throw std::invalid_argument("mix_soft: matrix size does not match grid");
  if (!is_header_fixed(d_r)) throw std::invalid_argument("mix_soft: d_r is not header-fixed");

  const RowPerm hard_rows = row_perm_from_lifted(d_r);
  const ColPerm hard_cols = col_perm_from_matrix(d_c);
  CellGridInput out = apply_hard(in, hard_rows, hard_cols, mode);

  // Soft side: out block (i,j) = sum_{i',j'} d_r(i,i') d_c(j',j) in(i',j').
  for (std::size_t i = 0; i < in.grid_rows; ++i) {
    for (std::size_t j = 0; j < in.grid_cols; ++j) {
      Mat block(in.l_cell, in.dim, 0.0);
      for (std::size_t si = 0; si < in.grid_rows; ++si) {
        const double wr = d_r(i, si);
        if (wr == 0.0) continue;
        for (std::size_t sj = 0; sj < in.grid_cols; ++sj) {
          const double w = wr * d_c(sj, j);
          if (w == 0.0) continue;
          const Mat& src = in.emb[in.cell_index(si, sj)];
          for (std::size_t t = 0; t < block.size(); ++t) block.data()[t] += w * src.data()[t];
        }
      }
      const std::size_t dst = out.cell_index(i, j);
      out.emb[dst] = std::move(block);
      out.tok[dst].assign(in.l_cell, -1);
    }
  }
  return out;
}

inline PermutedInput identity_input(const EncodedExample& ex) {
  return PermutedInput{ex.grid, ex.question, ex.answer};
}

inline PermutedInput hard_permuted_input(const EncodedExample& ex, const RowPerm& rp,
                                         const ColPerm& cp,
                                         PositionMode mode = PositionMode::kSerializedOrder) {
  return PermutedInput{apply_hard(ex.grid, rp, cp, mode), ex.question, ex.answer};
}

// Everything the backward pass needs, captured during the forward pass.
struct ForwardTape {
  std::size_t seq_len = 0, table_tokens = 0, q_len = 0, a_len = 0, prompt_end = 0;
  std::vector<int> pos_ids;
  std::vector<int> token_ids;  // -1 on table slots
  std::vector<std::uint8_t> valid;
  std::vector<std::size_t> read_pos;
  std::vector<int> answer;
  std::size_t grid_rows = 0, grid_cols = 0, l_cell = 0, dim = 0;

  Mat x, q, k, v, attw, ctx, h1, ff_act, h2;
  Mat logits;  // a_len x V
  double loss = 0.0;
};

namespace detail {

constexpr double kMaskValue = -1e30;

inline bool attention_allowed(const ForwardTape& t, std::size_t a, std::size_t b) {
  if (!t.valid[b]) return false;
  if (a < t.prompt_end) return b < t.prompt_end;
  return b < t.prompt_end || b <= a;
}

// Assemble the input sequence and run the transformer up to h2.
inline void run_trunk(const ToyVictim& vv, const PermutedInput& input, ForwardTape& t) {
  const CellGridInput& g = input.grid;
  if (g.dim != vv.cfg.d) throw std::invalid_argument("forward: grid dim mismatch");
  t.table_tokens = g.table_tokens();
  t.q_len = input.question.size();
  t.a_len = input.answer.size();
  t.seq_len = t.table_tokens + t.q_len + t.a_len;
  t.prompt_end = t.table_tokens + t.q_len;
  if (t.prompt_end == 0) throw std::invalid_argument("forward: empty prompt");
  t.grid_rows = g.grid_rows;
  t.grid_cols = g.grid_cols;
  t.l_cell = g.l_cell;
  t.dim = g.dim;
  t.answer = input.answer;

  t.pos_ids.assign(t.seq_len, 0);
  t.token_ids.assign(t.seq_len, -1);
  t.valid.assign(t.seq_len, 1);
  t.x = Mat(t.seq_len, g.dim);

  std::size_t p = 0;
  for (std::size_t c = 0; c < g.n_cells(); ++c) {
    for (std::size_t k = 0; k < g.l_cell; ++k, ++p) {
      const int pid = g.pos[c][k];
      if (pid < 0 || static_cast<std::size_t>(pid) >= vv.cfg.p_max)
        throw std::invalid_argument("forward: position id out of range");
      t.pos_ids[p] = pid;
      t.valid[p] = g.att[c][k];
      for (std::size_t e = 0; e < g.dim; ++e)
        t.x(p, e) = g.emb[c](k, e) + vv.pos_emb(static_cast<std::size_t>(pid), e);
    }
  }
  auto place_token = [&](int id, std::size_t pos_id) {
    if (pos_id >= vv.cfg.p_max) throw std::invalid_argument("forward: sequence exceeds p_max");
    t.pos_ids[p] = static_cast<int>(pos_id);
    t.token_ids[p] = id;
    for (std::size_t e = 0; e < g.dim; ++e)
      t.x(p, e) = vv.tok_emb(static_cast<std::size_t>(id), e) + vv.pos_emb(pos_id, e);
    ++p;
  };
  for (std::size_t i = 0; i < t.q_len; ++i) place_token(input.question[i], t.table_tokens + i);
  for (std::size_t i = 0; i < t.a_len; ++i)
    place_token(input.answer[i], t.table_tokens + t.q_len + i);

  const double scale = 1.0 / std::sqrt(static_cast<double>(g.dim));
  t.q = matmul(t.x, vv.wq);
  t.k = matmul(t.x, vv.wk);
  t.v = matmul(t.x, vv.wv);
  t.attw = Mat(t.seq_len, t.seq_len);
  for (std::size_t a = 0; a < t.seq_len; ++a) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < t.seq_len; ++b) {
      double s = kMaskValue;
      if (attention_allowed(t, a, b)) {
        s = 0.0;
        for (std::size_t e = 0; e < g.dim; ++e) s += t.q(a, e) * t.k(b, e);
        s *= scale;
      }
      t.attw(a, b) = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (std::size_t b = 0; b < t.seq_len; ++b) {
      const double w = std::exp(t.attw(a, b) - mx);
      t.attw(a, b) = w;
      z += w;
    }
    for (std::size_t b = 0; b < t.seq_len; ++b) t.attw(a, b) /= z;
  }
  t.ctx = matmul(t.attw, t.v);
  Mat attn_out = matmul(t.ctx, vv.wo);
  t.h1 = t.x;
  t.h1 += attn_out;
  Mat ff_pre = matmul(t.h1, vv.w1);
  t.ff_act = ff_pre;
  for (std::size_t i = 0; i < t.ff_act.size(); ++i) t.ff_act.data()[i] = std::tanh(t.ff_act.data()[i]);
  t.h2 = t.h1;
  t.h2 += matmul(t.ff_act, vv.w2);
}

inline double log_softmax_at(const Mat& logits, std::size_t row, int target) {
  double mx = logits(row, 0);
  for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(row, j));
  double z = 0.0;
  for (std::size_t j = 0; j < logits.cols(); ++j) z += std::exp(logits(row, j) - mx);
  return logits(row, static_cast<std::size_t>(target)) - mx - std::log(z);
}

}  // namespace detail

// Teacher-forced forward pass. Answer token t is predicted from the hidden
// state of the previous position (the last prompt token for t = 0); answer
// positions attend to the prompt and to earlier answer tokens only.
inline ForwardTape forward_loss(const ToyVictim& victim, const PermutedInput& input) {
  if (input.answer.empty()) throw std::invalid_argument("forward_loss: answer tokens required");
  ForwardTape t;
  detail::run_trunk(victim, input, t);

  t.read_pos.resize(t.a_len);
  for (std::size_t i = 0; i < t.a_len; ++i) t.read_pos[i] = t.prompt_end - 1 + i;
  t.logits = Mat(t.a_len, victim.vocab.size());
  for (std::size_t i = 0; i < t.a_len; ++i) {
    const std::size_t rp = t.read_pos[i];
    for (std::size_t j = 0; j < victim.vocab.size(); ++j) {
      double s = 0.0;
      for (std::size_t e = 0; e < t.dim; ++e) s += t.h2(rp, e) * victim.w_out(e, j);
      t.logits(i, j) = s;
    }
  }
  t.loss = 0.0;
  for (std::size_t i = 0; i < t.a_len; ++i)
    t.loss -= detail::log_softmax_at(t.logits, i, t.answer[i]);
  return t;
}

struct ParamGrads {
  Mat tok_emb, pos_emb, wq, wk, wv, wo, w1, w2, w_out;

  static ParamGrads zeros_like(const ToyVictim& v) {
    ParamGrads g;
    g.tok_emb = Mat(v.tok_emb.rows(), v.tok_emb.cols());
    g.pos_emb = Mat(v.pos_emb.rows(), v.pos_emb.cols());
    g.wq = Mat(v.wq.rows(), v.wq.cols());
    g.wk = Mat(v.wk.rows(), v.wk.cols());
    g.wv = Mat(v.wv.rows(), v.wv.cols());
    g.wo = Mat(v.wo.rows(), v.wo.cols());
    g.w1 = Mat(v.w1.rows(), v.w1.cols());
    g.w2 = Mat(v.w2.rows(), v.w2.cols());
    g.w_out = Mat(v.w_out.rows(), v.w_out.cols());
    return g;
  }

  std::vector<Mat*> list() {
    return {&tok_emb, &pos_emb, &wq, &wk, &wv, &wo, &w1, &w2, &w_out};
  }
};

struct VictimGradients {
  double loss = 0.0;
  std::vector<Mat> grad_emb;  // one l_cell x d block per grid cell
};

// Upstream gradient of the summed token cross-entropies with respect to the
// answer logits: softmax(logits) - onehot(target), row per answer token.
inline Mat ce_dlogits(const ForwardTape& t) {
  Mat d(t.a_len, t.logits.cols());
  for (std::size_t i = 0; i < t.a_len; ++i) {
    double mx = t.logits(i, 0);
    for (std::size_t j = 1; j < t.logits.cols(); ++j) mx = std::max(mx, t.logits(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < t.logits.cols(); ++j) z += std::exp(t.logits(i, j) - mx);
    for (std::size_t j = 0; j < t.logits.cols(); ++j)
      d(i, j) = std::exp(t.logits(i, j) - mx) / z;
    d(i, static_cast<std::size_t>(t.answer[i])) -= 1.0;
  }
  return d;
}

// Exact reverse of the forward computation. Fills the gradient with respect
// to the table embedding grid and, when asked, the parameter gradients.
inline void backward(const ToyVictim& vv, const ForwardTape& t, const Mat& dlogits,
                     std::vector<Mat>* grad_emb, ParamGrads* pg) {
  if (dlogits.rows() != t.a_len) throw std::invalid_argument("backward: dlogits shape mismatch");
  const std::size_t T = t.seq_len, D = t.dim;

  Mat dh2(T, D);
  for (std::size_t i = 0; i < t.a_len; ++i) {
    const std::size_t rp = t.read_pos[i];
    for (std::size_t j = 0; j < dlogits.cols(); ++j) {
      const double dl = dlogits(i, j);
      if (dl == 0.0) continue;
      for (std::size_t e = 0; e < D; ++e) dh2(rp, e) += dl * vv.w_out(e, j);
      if (pg)
        for (std::size_t e = 0; e < D; ++e) pg->w_out(e, j) += t.h2(rp, e) * dl;
    }
  }

  // h2 = h1 + tanh(h1 W1) W2
  Mat dff_act(T, vv.cfg.d_ff);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t f = 0; f < vv.cfg.d_ff; ++f) {
      double s = 0.0;
      for (std::size_t e = 0; e < D; ++e) s += dh2(i, e) * vv.w2(f, e);
      dff_act(i, f) = s;
    }
  if (pg) {
    for (std::size_t f = 0; f < vv.cfg.d_ff; ++f)
      for (std::size_t e = 0; e < D; ++e) {
        double s = 0.0;
        for (std::size_t i = 0; i < T; ++i) s += t.ff_act(i, f) * dh2(i, e);
        pg->w2(f, e) += s;
      }
  }
  Mat dff_pre = dff_act;
  for (std::size_t i = 0; i < dff_pre.size(); ++i) {
    const double a = t.ff_act.data()[i];
    dff_pre.data()[i] *= (1.0 - a * a);
  }
  Mat dh1 = dh2;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t e = 0; e < D; ++e) {
      double s = 0.0;
      for (std::size_t f = 0; f < vv.cfg.d_ff; ++f) s += dff_pre(i, f) * vv.w1(e, f);
      dh1(i, e) += s;
    }
  if (pg) {
    for (std::size_t e = 0; e < D; ++e)
      for (std::size_t f = 0; f < vv.cfg.d_ff; ++f) {
        double s = 0.0;
        for (std::size_t i = 0; i < T; ++i) s += t.h1(i, e) * dff_pre(i, f);
        pg->w1(e, f) += s;
      }
  }

  // h1 = x + (attw v) Wo
  Mat dx = dh1;
  Mat dctx(T, D);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t e = 0; e < D; ++e) {
      double s = 0.0;
      for (std::size_t e2 = 0; e2 < D; ++e2) s += dh1(i, e2) * vv.wo(e, e2);
      dctx(i, e) = s;
    }
  if (pg) {
    for (std::size_t e = 0; e < D; ++e)
      for (std::size_t e2 = 0; e2 < D; ++e2) {
        double s = 0.0;
        for (std::size_t i = 0; i < T; ++i) s += t.ctx(i, e) * dh1(i, e2);
        pg->wo(e, e2) += s;
      }
  }

  // ctx = attw v
  Mat dattw(T, T);
  for (std::size_t a = 0; a < T; ++a)
    for (std::size_t b = 0; b < T; ++b) {
      double s = 0.0;
      for (std::size_t e = 0; e < D; ++e) s += dctx(a, e) * t.v(b, e);
      dattw(a, b) = s;
    }
  Mat dv(T, D);
  for (std::size_t b = 0; b < T; ++b)
    for (std::size_t e = 0; e < D; ++e) {
      double s = 0.0;
      for (std::size_t a = 0; a < T; ++a) s += t.attw(a, b) * dctx(a, e);
      dv(b, e) = s;
    }

  // softmax rows; masked entries have weight exactly 0 and stay silent
  Mat dscore(T, T);
  const double scale = 1.0 / std::sqrt(static_cast<double>(D));
  for (std::size_t a = 0; a < T; ++a) {
    double dot = 0.0;
    for (std::size_t b = 0; b < T; ++b) dot += t.attw(a, b) * dattw(a, b);
    for (std::size_t b = 0; b < T; ++b)
      dscore(a, b) = t.attw(a, b) * (dattw(a, b) - dot) * scale;
  }

  Mat dq(T, D), dk(T, D);
  for (std::size_t a = 0; a < T; ++a)
    for (std::size_t b = 0; b < T; ++b) {
      const double ds = dscore(a, b);
      if (ds == 0.0) continue;
      for (std::size_t e = 0; e < D; ++e) {
        dq(a, e) += ds * t.k(b, e);
        dk(b, e) += ds * t.q(a, e);
      }
    }

  auto accumulate_proj = [&](const Mat& dproj, const Mat& w, Mat* dw) {
    // dx += dproj w^T; dw += x^T dproj
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t e = 0; e < D; ++e) {
        double s = 0.0;
        for (std::size_t e2 = 0; e2 < D; ++e2) s += dproj(i, e2) * w(e, e2);
        dx(i, e) += s;
      }
    if (dw) {
      for (std::size_t e = 0; e < D; ++e)
        for (std::size_t e2 = 0; e2 < D; ++e2) {
          double s = 0.0;
          for (std::size_t i = 0; i < T; ++i) s += t.x(i, e) * dproj(i, e2);
          (*dw)(e, e2) += s;
        }
    }
  };
  accumulate_proj(dq, vv.wq, pg ? &pg->wq : nullptr);
  accumulate_proj(dk, vv.wk, pg ? &pg->wk : nullptr);
  accumulate_proj(dv, vv.wv, pg ? &pg->wv : nullptr);

  // Route dx rows back to the embedding grid and the embedding tables.
  if (grad_emb) {
    grad_emb->assign(t.grid_rows * t.grid_cols, Mat(t.l_cell, D, 0.0));
  }
  std::size_t p = 0;
  for (std::size_t c = 0; c < t.grid_rows * t.grid_cols; ++c) {
    for (std::size_t k = 0; k < t.l_cell; ++k, ++p) {
      if (grad_emb)
        for (std::size_t e = 0; e < D; ++e) (*grad_emb)[c](k, e) = dx(p, e);
      if (pg)
        for (std::size_t e = 0; e < D; ++e)
          pg->pos_emb(static_cast<std::size_t>(t.pos_ids[p]), e) += dx(p, e);
    }
  }
  for (; p < T; ++p) {
    if (pg) {
      for (std::size_t e = 0; e < D; ++e) {
        pg->tok_emb(static_cast<std::size_t>(t.token_ids[p]), e) += dx(p, e);
        pg->pos_emb(static_cast<std::size_t>(t.pos_ids[p]), e) += dx(p, e);
      }
    }
  }
}

// Gradient of the cross-entropy loss with respect to the (possibly mixed)
// table embedding grid.
inline VictimGradients backward_to_emb(const ToyVictim& victim, const ForwardTape& tape) {
  VictimGradients out;
  out.loss = tape.loss;
  backward(victim, tape, ce_dlogits(tape), &out.grad_emb, nullptr);
  return out;
}

// For training: routes grid-slot gradients back into the token embedding
// table using the slot token ids recorded at encode time.
inline void backward_params(const ToyVictim& victim, const ForwardTape& t,
                            const CellGridInput& grid, ParamGrads* pg) {
  std::vector<Mat> grad_emb;
  backward(victim, t, ce_dlogits(t), &grad_emb, pg);
  for (std::size_t c = 0; c < grid.n_cells(); ++c) {
    for (std::size_t k = 0; k < grid.l_cell; ++k) {
      const int tok = grid.tok[c][k];
      if (tok < 0) continue;
      for (std::size_t e = 0; e < grid.dim; ++e)
        pg->tok_emb(static_cast<std::size_t>(tok), e) += grad_emb[c](k, e);
    }
  }
  for (std::size_t e = 0; e < grid.dim; ++e) pg->tok_emb(Vocab::kPad, e) = 0.0;
}

// Greedy decoding: repeatedly extend the answer with the argmax token until
// <eos> or the token budget. Ties break toward the lowest id. The returned
// ids include the terminating <eos> when one was produced.
inline std::vector<int> generate_ids(const ToyVictim& victim, const PermutedInput& input,
                                     std::size_t max_tokens) {
  std::vector<int> generated;
  while (generated.size() < max_tokens) {
    PermutedInput step{input.grid, input.question, generated};
    ForwardTape t;
    detail::run_trunk(victim, step, t);
    const std::size_t rp = t.seq_len - 1;
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < victim.vocab.size(); ++j) {
      double s = 0.0;
      for (std::size_t e = 0; e < t.dim; ++e) s += t.h2(rp, e) * victim.w_out(e, j);
      if (s > best_score) {
        best_score = s;
        best = static_cast<int>(j);
      }
    }
    generated.push_back(best);
    if (best == Vocab::kEos) break;
  }
  return generated;
}

inline std::string generate(const ToyVictim& victim, const PermutedInput& input,
                            std::size_t max_tokens) {
  return victim.vocab.decode(generate_ids(victim, input, max_tokens));
}

}  // namespace atp
