#pragma once

#include "fiberforge/errors.hpp"
#include "fiberforge/evaluation.hpp"
#include "fiberforge/model_io.hpp"
#include "fiberforge/neuralnet.hpp"
#include "fiberforge/pipelines.hpp"
#include "fiberforge/reports.hpp"
#include "fiberforge/rng.hpp"
#include "fiberforge/scaler.hpp"
#include "fiberforge/sweep.hpp"
#include "fiberforge/synthdata.hpp"
