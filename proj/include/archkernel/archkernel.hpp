#pragma once

// Umbrella header for the library (serialization lives in io.hpp, which
// additionally needs nlohmann/json).

#include "archkernel/conditional.hpp"
#include "archkernel/copula.hpp"
#include "archkernel/error.hpp"
#include "archkernel/estimation.hpp"
#include "archkernel/generator.hpp"
#include "archkernel/kernel.hpp"
#include "archkernel/metrics.hpp"
#include "archkernel/rng.hpp"
#include "archkernel/sampling.hpp"
#include "archkernel/singularity.hpp"
