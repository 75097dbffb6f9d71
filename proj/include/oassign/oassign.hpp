#pragma once

#include "oassign/analysis.hpp"
#include "oassign/assigner.hpp"
#include "oassign/config.hpp"
#include "oassign/divergence.hpp"
#include "oassign/dota.hpp"
#include "oassign/errors.hpp"
#include "oassign/geometry.hpp"
#include "oassign/priors.hpp"
#include "oassign/report_io.hpp"
#include "oassign/rng.hpp"
