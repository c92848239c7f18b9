#pragma once

#include "errors.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "io.hpp"
#include "stats.hpp"
#include "knn.hpp"
#include "prune.hpp"
#include "search_graph.hpp"
#include "search.hpp"
#include "index.hpp"
#include "bench.hpp"
