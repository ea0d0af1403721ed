#pragma once

#include "billiard_modes.hpp"
#include "config.hpp"
#include "discretize.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "gluing_harness.hpp"
#include "grid.hpp"
#include "jet.hpp"
#include "parallel.hpp"
#include "quasimode_builder.hpp"
#include "resolvent_probe.hpp"
#include "scaling_fit.hpp"
#include "trapping_classifier.hpp"
#include "warp_model.hpp"
