#include "bmnet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace bmnet::numerics {

double scheduled_lr(const AdamOptions& options, std::size_t epoch) {
  double lr = options.base_lr;
  for (std::size_t m : options.milestones) {
    if (epoch >= m) lr *= options.decay;
  }
  return lr;
}

AdamState make_adam_state(const ParamStore& params) {
  AdamState state;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = params.value(i);
    state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return state;
}

void adam_step(ParamStore& params, const GradStore& grads, AdamState& state,
               const AdamOptions& options, double lr) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = params.value(i);
    if (grads[i].rows() != p.rows() || grads[i].cols() != p.cols() ||
        state.first_moment[i].rows() != p.rows() || state.first_moment[i].cols() != p.cols()) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter " + params.name(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(options.beta1, t);
  const double correction2 = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    const Matrix& g = grads[i];
    m = options.beta1 * m + (1.0 - options.beta1) * g;
    v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseProduct(g);
    Matrix& p = params.value(i);
    p.array() -= lr * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + options.epsilon);
  }
}

}  // namespace bmnet::numerics
