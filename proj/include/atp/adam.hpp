#pragma once

#include <cmath>

#include "atp/matrix.hpp"

namespace atp {

struct AdamParams {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Mat first_moment;
  Mat second_moment;
  long step_count = 0;

  static AdamState like(const Mat& theta) {
    AdamState s;
    s.first_moment = Mat(theta.rows(), theta.cols(), 0.0);
    s.second_moment = Mat(theta.rows(), theta.cols(), 0.0);
    return s;
  }
};

// Standard bias-corrected Adam update. With ascent=true the step is taken
// along the gradient (maximization); otherwise against it.
inline void adam_step(Mat& theta, const Mat& grad, AdamState& state, const AdamParams& hp,
                      bool ascent = false) {
  theta.require_same_shape(grad);
  theta.require_same_shape(state.first_moment);
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double m_corr = 1.0 - std::pow(hp.beta1, t);
  const double v_corr = 1.0 - std::pow(hp.beta2, t);
  const double sign = ascent ? 1.0 : -1.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad.data()[i];
    double& m = state.first_moment.data()[i];
    double& v = state.second_moment.data()[i];
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
    const double m_hat = m / m_corr;
    const double v_hat = v / v_corr;
    theta.data()[i] += sign * hp.learning_rate * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

}  // namespace atp
