#pragma once

// Umbrella header for the SELD evaluation library.

#include "seld/annotations.hpp"
#include "seld/assignment.hpp"
#include "seld/errors.hpp"
#include "seld/evaluation.hpp"
#include "seld/geometry.hpp"
#include "seld/metrics_det.hpp"
#include "seld/metrics_joint.hpp"
#include "seld/metrics_loc.hpp"
#include "seld/stats.hpp"
#include "seld/synth.hpp"
