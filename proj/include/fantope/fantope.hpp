#pragma once

#include "fantope/certificates.hpp"
#include "fantope/datagen.hpp"
#include "fantope/errors.hpp"
#include "fantope/geometry.hpp"
#include "fantope/io.hpp"
#include "fantope/objectives.hpp"
#include "fantope/random.hpp"
#include "fantope/solvers.hpp"
#include "fantope/spectral.hpp"
