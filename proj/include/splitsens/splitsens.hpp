#pragma once

// Umbrella header: everything except the CLI front end.

#include "splitsens/core.hpp"
#include "splitsens/model.hpp"
#include "splitsens/models.hpp"
#include "splitsens/objectives.hpp"
#include "splitsens/trajectory.hpp"
#include "splitsens/subspaces.hpp"
#include "splitsens/splitting.hpp"
#include "splitsens/sensitivity.hpp"
#include "splitsens/baselines.hpp"
#include "splitsens/io.hpp"
