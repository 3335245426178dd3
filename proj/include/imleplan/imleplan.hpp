#pragma once

// single include for the whole library

#include "imleplan/costs.hpp"
#include "imleplan/dataset_io.hpp"
#include "imleplan/diffusion.hpp"
#include "imleplan/errors.hpp"
#include "imleplan/film_mlp.hpp"
#include "imleplan/generator.hpp"
#include "imleplan/imle_train.hpp"
#include "imleplan/metrics.hpp"
#include "imleplan/planners.hpp"
#include "imleplan/rng.hpp"
#include "imleplan/serialize_util.hpp"
#include "imleplan/sim_data.hpp"
#include "imleplan/trajectory.hpp"
