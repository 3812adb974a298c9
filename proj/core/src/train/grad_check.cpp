#include "doctor/train/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "doctor/errors.hpp"
#include "doctor/train/losses.hpp"

namespace doctor::train {

namespace {

// The objective the trainer optimizes: reconstruction means plus the TD
// mean with bootstraps held at the provided snapshot (semi-gradient).
double objective(const model::Network& net, const std::vector<model::MaskedSequence>& batch,
                 const std::vector<Eigen::VectorXd>& frozen_q, double gamma, double nu,
                 double inv_slots, double inv_pairs) {
  LossSums sums;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto out = net.forward(batch[i]);
    auto s = loss_terms(net.config(), batch[i], out, gamma, nu, 0.0, 0.0, nullptr);
    sums.ret += s.ret;
    sums.state += s.state;
    sums.action += s.action;
    sums.q += q_pair_sum_frozen(batch[i], out, frozen_q[i], gamma, nu);
  }
  return (sums.ret + sums.state + sums.action) * inv_slots + sums.q * inv_pairs;
}

}  // namespace

double batch_loss(const model::Network& net, const std::vector<model::MaskedSequence>& batch,
                  double gamma, double nu) {
  LossCounts counts;
  for (const auto& seq : batch) {
    auto c = count_loss_targets(seq);
    counts.slots += c.slots;
    counts.pairs += c.pairs;
  }
  LossSums sums;
  for (const auto& seq : batch) {
    auto out = net.forward(seq);
    auto s = loss_terms(net.config(), seq, out, gamma, nu, 0.0, 0.0, nullptr);
    sums.ret += s.ret;
    sums.state += s.state;
    sums.action += s.action;
    sums.q += s.q;
  }
  double loss = 0.0;
  if (counts.slots > 0.0) loss += (sums.ret + sums.state + sums.action) / counts.slots;
  if (counts.pairs > 0.0) loss += sums.q / counts.pairs;
  return loss;
}

double grad_check(model::Network& net, const std::vector<model::MaskedSequence>& batch,
                  double gamma, double nu, double fd_step) {
  if (net.config().dropout != 0.0) throw UsageError("grad_check: dropout must be 0");
  if (batch.empty()) throw UsageError("grad_check: empty batch");

  LossCounts counts;
  for (const auto& seq : batch) {
    auto c = count_loss_targets(seq);
    counts.slots += c.slots;
    counts.pairs += c.pairs;
  }
  const double inv_slots = counts.slots > 0.0 ? 1.0 / counts.slots : 0.0;
  const double inv_pairs = counts.pairs > 0.0 ? 1.0 / counts.pairs : 0.0;

  // Analytic pass; the q snapshot taken here is what the objective's
  // bootstrap stays pinned to on the FD side.
  std::vector<Eigen::VectorXd> frozen_q;
  auto grads = model::Network::zeros_like(net.config());
  model::SeqCache cache;
  model::OutputGrads dout;
  for (const auto& seq : batch) {
    auto out = net.forward(seq, &cache);
    frozen_q.push_back(out.q);
    loss_terms(net.config(), seq, out, gamma, nu, inv_slots, inv_pairs, &dout);
    net.backward(seq, cache, dout, grads);
  }

  std::vector<Eigen::MatrixXd*> ps, gs;
  net.params().visit([&](const std::string&, Eigen::MatrixXd& m) { ps.push_back(&m); });
  grads.visit([&](const std::string&, Eigen::MatrixXd& m) { gs.push_back(&m); });

  double max_rel_err = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i];
    const auto& g = *gs[i];
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double saved = p(j);
      p(j) = saved + fd_step;
      double up = objective(net, batch, frozen_q, gamma, nu, inv_slots, inv_pairs);
      p(j) = saved - fd_step;
      double down = objective(net, batch, frozen_q, gamma, nu, inv_slots, inv_pairs);
      p(j) = saved;
      double fd = (up - down) / (2.0 * fd_step);
      double rel = std::abs(g(j) - fd) / std::max(1.0, std::abs(g(j)) + std::abs(fd));
      max_rel_err = std::max(max_rel_err, rel);
    }
  }
  return max_rel_err;
}

}  // namespace doctor::train
