#include "batchq/discretizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "batchq/error.hpp"

namespace batchq {

double eta_bound(const FiniteSmdp& model) {
  double bound = 1.0 / model.workload().lambda;
  const std::size_t so = model.overflow();
  for (int a = 1; a <= model.profile().b_max(); ++a) {
    const double tau = model.sojourn(a);
    // Interior states: self-transition needs exactly a arrivals.
    const double stay = model.arrivals(a, a);
    if (stay < 1.0) bound = std::min(bound, tau / (1.0 - stay));
    // S_o: leaving requires at most a arrivals.
    const double leave = 1.0 - model.overflow_mass(so, a);
    if (leave > 0.0) bound = std::min(bound, tau / leave);
  }
  return bound;
}

DtMdp::DtMdp(std::shared_ptr<const FiniteSmdp> model, double eta)
    : model_(std::move(model)), eta_(eta) {
  if (!model_) throw Error(ErrorKind::config, "dtmdp: null model");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorKind::config, "dtmdp: eta must be > 0");
}

double DtMdp::diagonal(std::size_t s, int a) const {
  const double d = 1.0 + eta_ * (model_->prob(s, a, s) - 1.0) / model_->sojourn(a);
  if (d < 0.0 && d > -1e-12) return 0.0;
  if (d > 1.0 && d < 1.0 + 1e-12) return 1.0;
  return d;
}

double DtMdp::expected(std::size_t s, int a, std::span<const double> values) const {
  const double move = eta_ / model_->sojourn(a);
  return values[s] + move * (model_->expected(s, a, values) - values[s]);
}

std::vector<double> DtMdp::transition_row(std::size_t s, int a) const {
  std::vector<double> row = model_->transition_row(s, a);
  const double move = eta_ / model_->sojourn(a);
  for (double& x : row) x *= move;
  row[s] = diagonal(s, a);
  return row;
}

std::size_t DtMdp::sample_next(std::size_t s, int a, double u) const {
  // Stay with probability 1 - eta/y; otherwise move according to m'.
  const double move = eta_ / model_->sojourn(a);
  const double stay = 1.0 - move;
  if (u < stay) return s;
  const double v = std::min((u - stay) / move, std::nextafter(1.0, 0.0));
  return model_->sample_next(s, a, v);
}

DtMdp to_dtmdp(std::shared_ptr<const FiniteSmdp> model, double eta_fraction) {
  if (!model) throw Error(ErrorKind::config, "dtmdp: null model");
  if (!(eta_fraction > 0.0 && eta_fraction < 1.0))
    throw Error(ErrorKind::config, "eta_fraction must lie in (0, 1), got " +
                                       std::to_string(eta_fraction));
  const double eta = eta_fraction * eta_bound(*model);
  DtMdp dt(model, eta);
  for (std::size_t s = 0; s < model->num_states(); ++s) {
    for (int a = 0; a <= model->max_action(s); ++a) {
      const double raw = 1.0 + eta * (model->prob(s, a, s) - 1.0) / model->sojourn(a);
      if (raw < -1e-12 || raw > 1.0 + 1e-12)
        throw Error(ErrorKind::model_violation,
                    "discretized diagonal " + std::to_string(raw) + " at (s=" + std::to_string(s) +
                        ", a=" + std::to_string(a) + ") outside [0, 1]");
    }
  }
  return dt;
}

}  // namespace batchq
