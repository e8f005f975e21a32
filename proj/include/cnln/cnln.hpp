#pragma once

#include "cnln/experiments.hpp"
#include "cnln/metrics.hpp"
#include "cnln/network.hpp"
#include "cnln/network_io.hpp"
#include "cnln/parallel.hpp"
#include "cnln/phi.hpp"
#include "cnln/reference.hpp"
#include "cnln/schemes.hpp"
#include "cnln/spectrum.hpp"
