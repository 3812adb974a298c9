#pragma once

#include <vector>

#include "doctor/model/network.hpp"

namespace doctor::train {

// Compares the analytic gradient of the total loss (reconstruction +
// expectile TD) against central finite differences for every parameter.
// Requires dropout 0 and a small model; step 1e-5, relative error
// |ga-gf| / max(1, |ga|+|gf|).
double grad_check(model::Network& net, const std::vector<model::MaskedSequence>& batch,
                  double gamma, double nu, double fd_step = 1e-5);

// Batch loss used by both sides of the check.
double batch_loss(const model::Network& net, const std::vector<model::MaskedSequence>& batch,
                  double gamma, double nu);

}  // namespace doctor::train
