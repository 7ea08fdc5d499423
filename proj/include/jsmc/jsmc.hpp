#pragma once

#include "jsmc/dataset.hpp"
#include "jsmc/error.hpp"
#include "jsmc/graph.hpp"
#include "jsmc/harness.hpp"
#include "jsmc/io.hpp"
#include "jsmc/linalg.hpp"
#include "jsmc/metrics.hpp"
#include "jsmc/optimizer.hpp"
#include "jsmc/spectral.hpp"
