#pragma once

// De-confounding representation learning for counterfactual inference on
// continuous treatments: adversarially learned covariate representations
// disentangled from the treatment, plus the synthetic benchmark scenarios,
// reweighting baselines, and evaluation metrics used to check them.

#include "drl/autodiff.hpp"
#include "drl/baselines.hpp"
#include "drl/bench.hpp"
#include "drl/errors.hpp"
#include "drl/io.hpp"
#include "drl/metrics.hpp"
#include "drl/model.hpp"
#include "drl/nn.hpp"
#include "drl/rng.hpp"
#include "drl/split.hpp"
#include "drl/synthgen.hpp"
#include "drl/tensor.hpp"
