#pragma once

#include "gossip.hpp"
#include "harness.hpp"
#include "jacobi_eigen.hpp"
#include "kaczmarz.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "topology.hpp"
#include "trace.hpp"
