#include "seqtest/observation_model.hpp"

#include <stdexcept>

namespace seqtest {

void ObservationModel::validate_param(const Param& theta) const {
  if (static_cast<int>(theta.size()) != param_dim())
    throw std::invalid_argument(name() + ": parameter dimension mismatch");
  for (double v : theta)
    if (!std::isfinite(v))
      throw std::invalid_argument(name() + ": non-finite parameter");
}

void ObservationModel::hypothesis_scores(const TrajectoryState&,
                                         std::span<const Param>,
                                         std::span<double>) const {
  throw std::logic_error(name() + ": whole-sample scores not provided");
}

bool ObservationModel::restricted_sup_logdensity(const TrajectoryState&,
                                                 const Region&,
                                                 double&) const {
  return false;
}

bool ObservationModel::estimate(const TrajectoryState&, Param&) const {
  return false;
}

bool ObservationModel::kl_infimum_closed_form(const Param&, const Region&,
                                              double&) const {
  return false;
}

}  // namespace seqtest
