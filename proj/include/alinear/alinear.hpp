#pragma once

#include "alinear/checkpoint.hpp"
#include "alinear/data.hpp"
#include "alinear/decomposition.hpp"
#include "alinear/error.hpp"
#include "alinear/experiment.hpp"
#include "alinear/metrics.hpp"
#include "alinear/model.hpp"
#include "alinear/optim.hpp"
#include "alinear/synthetic.hpp"
#include "alinear/training.hpp"
