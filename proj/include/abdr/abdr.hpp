#pragma once

// Convex subspace clustering by adaptive block diagonal representation.

#include "abdr/dataset.hpp"
#include "abdr/error.hpp"
#include "abdr/graph.hpp"
#include "abdr/io.hpp"
#include "abdr/kmeans.hpp"
#include "abdr/metrics.hpp"
#include "abdr/reference_solve.hpp"
#include "abdr/solver.hpp"
#include "abdr/spectral.hpp"
#include "abdr/types.hpp"
