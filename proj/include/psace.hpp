#pragma once

#include "psace/bounds.hpp"
#include "psace/counts.hpp"
#include "psace/distributions.hpp"
#include "psace/em.hpp"
#include "psace/error.hpp"
#include "psace/gibbs.hpp"
#include "psace/identification.hpp"
#include "psace/io.hpp"
#include "psace/model.hpp"
#include "psace/model_checking.hpp"
#include "psace/parallel.hpp"
#include "psace/parameters.hpp"
#include "psace/posterior.hpp"
#include "psace/prior.hpp"
#include "psace/rng.hpp"
#include "psace/sensitivity.hpp"
#include "psace/simulation.hpp"
#include "psace/stats.hpp"
#include "psace/stratum.hpp"
#include "psace/surrogate.hpp"
#include "psace/version.hpp"
