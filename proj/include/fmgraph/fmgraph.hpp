#pragma once

// Umbrella header.
#include "fmgraph/data_io.hpp"
#include "fmgraph/error.hpp"
#include "fmgraph/eval.hpp"
#include "fmgraph/graph.hpp"
#include "fmgraph/random.hpp"
#include "fmgraph/report.hpp"
#include "fmgraph/solver.hpp"
#include "fmgraph/spectral.hpp"
#include "fmgraph/synth.hpp"
