#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "abundance/mcmc.hpp"

namespace oracle {

/// Simulation-based calibration of the capture-recapture sampler on a
/// two-year, two-day, one-class model with informative priors. Each
/// replicate draws parameters from the prior, simulates data, fits, and
/// ranks the true value among the stored draws; the result holds one KS
/// p-value per tracked parameter.
struct SbcResult {
  std::map<std::string, double> pvalues;
  int failed_fits = 0;
  double min_p() const;
};

SbcResult cr_sbc(int replicates, abundance::AbundanceUpdate mode, std::uint64_t seed,
                 long iterations, long burn_in, long thin);

}  // namespace oracle
