#pragma once

#include "hairec/error.hpp"
#include "hairec/rng.hpp"
#include "hairec/distribution.hpp"
#include "hairec/env_model.hpp"
#include "hairec/human_model.hpp"
#include "hairec/joint_pomdp.hpp"
#include "hairec/belief.hpp"
#include "hairec/mlp.hpp"
#include "hairec/trajectory.hpp"
#include "hairec/ahm.hpp"
#include "hairec/world.hpp"
#include "hairec/certify.hpp"
#include "hairec/solver.hpp"
#include "hairec/recommender.hpp"
#include "hairec/bounds.hpp"
#include "hairec/io.hpp"
#include "hairec/harness.hpp"
