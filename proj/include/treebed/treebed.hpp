#pragma once

#include "treebed/audit.hpp"
#include "treebed/decompose.hpp"
#include "treebed/density.hpp"
#include "treebed/distortion.hpp"
#include "treebed/ensemble.hpp"
#include "treebed/error.hpp"
#include "treebed/generators.hpp"
#include "treebed/graph.hpp"
#include "treebed/io.hpp"
#include "treebed/json_io.hpp"
#include "treebed/metric.hpp"
#include "treebed/parallel.hpp"
#include "treebed/prob_spanning_tree.hpp"
#include "treebed/rng.hpp"
#include "treebed/shell_cut.hpp"
#include "treebed/spanning_tree.hpp"
#include "treebed/ultrametric.hpp"
