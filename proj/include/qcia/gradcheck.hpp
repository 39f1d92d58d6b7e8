#pragma once

#include "qcia/net.hpp"

namespace qcia {

// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|,
// 1e-8), central differences in double precision. Nets above 50k parameters
// are rejected (TooManyParameters).
double grad_check(const Network& net, const PatchBatch& batch,
                  const std::vector<int>& labels, double step = 1e-5);

// Same comparison against caller-supplied gradient arrays; lets tests inject
// a corrupted gradient and confirm the check catches it.
double grad_check_against(const Network& net, const PatchBatch& batch,
                          const std::vector<int>& labels, double step,
                          const std::vector<std::vector<double>>& analytic_w,
                          const std::vector<std::vector<double>>& analytic_b);

// Double-precision analytic gradients (mean cross-entropy), for tests that
// need the reference values grad_check compares against.
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>>
analytic_gradients(const Network& net, const PatchBatch& batch,
                   const std::vector<int>& labels);

}  // namespace qcia
