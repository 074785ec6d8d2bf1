#pragma once

// Everything except JSON I/O (json_io.hpp needs nlohmann/json).

#include "dnorm_lab/cdf_quantile.hpp"
#include "dnorm_lab/density.hpp"
#include "dnorm_lab/dnorm.hpp"
#include "dnorm_lab/efunc.hpp"
#include "dnorm_lab/equivalence.hpp"
#include "dnorm_lab/errors.hpp"
#include "dnorm_lab/generator.hpp"
#include "dnorm_lab/probes.hpp"
#include "dnorm_lab/process_sim.hpp"
#include "dnorm_lab/quadrature.hpp"
#include "dnorm_lab/random.hpp"
#include "dnorm_lab/spectral.hpp"
#include "dnorm_lab/stats.hpp"
#include "dnorm_lab/version.hpp"
