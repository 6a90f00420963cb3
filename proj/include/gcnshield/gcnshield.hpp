#pragma once

#include "gcnshield/adjacency.hpp"
#include "gcnshield/attack.hpp"
#include "gcnshield/blockfile.hpp"
#include "gcnshield/common.hpp"
#include "gcnshield/dataset.hpp"
#include "gcnshield/defense.hpp"
#include "gcnshield/eval.hpp"
#include "gcnshield/gcn.hpp"
#include "gcnshield/graph.hpp"
#include "gcnshield/gvae.hpp"
#include "gcnshield/rng.hpp"
#include "gcnshield/similarity.hpp"
#include "gcnshield/spectral.hpp"
#include "gcnshield/split.hpp"
#include "gcnshield/version.hpp"
#include "gcnshield/wilcoxon.hpp"
