#pragma once

#include "emergent/core.hpp"
#include "emergent/error.hpp"
#include "emergent/mechanisms.hpp"
#include "emergent/metrics.hpp"
#include "emergent/oracle.hpp"
#include "emergent/profilegen.hpp"
#include "emergent/random.hpp"
#include "emergent/gflownet/checkpoint.hpp"
#include "emergent/gflownet/emergent.hpp"
#include "emergent/gflownet/graph_encoder.hpp"
#include "emergent/gflownet/losses.hpp"
#include "emergent/gflownet/state.hpp"
#include "emergent/gflownet/tabular.hpp"
#include "emergent/gflownet/train.hpp"
