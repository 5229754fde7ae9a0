#pragma once

#include "hebbmem/analysis.hpp"
#include "hebbmem/evaluation.hpp"
#include "hebbmem/experiments.hpp"
#include "hebbmem/network.hpp"
#include "hebbmem/patterns.hpp"
#include "hebbmem/plasticity.hpp"
#include "hebbmem/rng.hpp"
