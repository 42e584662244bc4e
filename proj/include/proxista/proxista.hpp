#pragma once

#include "proxista/analysis.hpp"
#include "proxista/error.hpp"
#include "proxista/experiment.hpp"
#include "proxista/io.hpp"
#include "proxista/linop.hpp"
#include "proxista/penalty.hpp"
#include "proxista/rng.hpp"
#include "proxista/solver.hpp"
#include "proxista/spec.hpp"
#include "proxista/svg.hpp"
#include "proxista/verify.hpp"
