#pragma once

// Umbrella header.
#include "fasc/analysis.hpp"
#include "fasc/assignment.hpp"
#include "fasc/clustering.hpp"
#include "fasc/dataset.hpp"
#include "fasc/error.hpp"
#include "fasc/harness.hpp"
#include "fasc/kmeans.hpp"
#include "fasc/numerics.hpp"
#include "fasc/random.hpp"
#include "fasc/scenario.hpp"
