// Copyright 2026 The mute Authors.
// SPDX-License-Identifier: Apache-2.0

// Central finite differences, independent of the tape's reverse rules: the
// loss is re-evaluated forward-only with perturbed inputs.

#ifndef MUTE_TESTS_GRADCHECK_H_
#define MUTE_TESTS_GRADCHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "autodiff/tape.h"
#include "common/rng.h"

namespace mute::testing {

struct GradCheckResult {
  double max_abs_diff = 0.0;
  double max_rel_diff = 0.0;
  // Count of entries outside max(abs_tol, rel_tol * |numeric|).
  std::size_t failures = 0;
  std::string worst;
};

using LossFn = std::function<ad::Var(ad::Tape&)>;

inline double eval_loss(const LossFn& fn) {
  ad::Tape tape(false);
  return fn(tape).value().item();
}

// Compares the tape's gradient for each tensor in params with central
// differences at the given step.
inline GradCheckResult gradcheck(const LossFn& fn,
                                 const std::vector<ad::Tensor*>& params,
                                 double step = 1e-5, double abs_tol = 1e-6,
                                 double rel_tol = 1e-4,
                                 std::size_t max_entries_per_param = 0) {
  for (auto* p : params) {
    p->set_requires_grad(true);
  }
  {
    ad::Tape tape;
    ad::Var loss = fn(tape);
    tape.backward(loss);
  }
  GradCheckResult r;
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Tensor& p = *params[k];
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    std::size_t n = p.size();
    std::size_t stride = 1;
    if (max_entries_per_param && n > max_entries_per_param) {
      stride = n / max_entries_per_param;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = p[i];
      p[i] = saved + step;
      const double up = eval_loss(fn);
      p[i] = saved - step;
      const double down = eval_loss(fn);
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double diff = std::abs(numeric - analytic[i]);
      const double rel = diff / std::max(std::abs(numeric), 1e-12);
      if (diff > r.max_abs_diff) {
        r.max_abs_diff = diff;
        r.worst = "param " + std::to_string(k) + " entry " +
                  std::to_string(i) + ": analytic " +
                  std::to_string(analytic[i]) + " numeric " +
                  std::to_string(numeric);
      }
      r.max_rel_diff = std::max(r.max_rel_diff, rel);
      if (diff > std::max(abs_tol, rel_tol * std::abs(numeric))) ++r.failures;
    }
  }
  for (auto* p : params) p->set_requires_grad(false);
  return r;
}

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, double lo = -2.0,
                                double hi = 2.0) {
  ad::Tensor t(std::move(shape));
  for (auto& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

}  // namespace mute::testing

#endif  // MUTE_TESTS_GRADCHECK_H_
