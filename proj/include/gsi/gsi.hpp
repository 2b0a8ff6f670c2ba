#pragma once

// Umbrella header: the whole graph-signal imputation library.

#include "gsi/errors.hpp"
#include "gsi/linalg.hpp"
#include "gsi/graph.hpp"
#include "gsi/spectral.hpp"
#include "gsi/signal_ops.hpp"
#include "gsi/observe.hpp"
#include "gsi/neural.hpp"
#include "gsi/baseline_gd.hpp"
#include "gsi/gan.hpp"
#include "gsi/data_io.hpp"
#include "gsi/experiment.hpp"
