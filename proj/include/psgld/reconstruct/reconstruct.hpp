#pragma once

#include "psgld/reconstruct/estimate.hpp"
#include "psgld/reconstruct/sampling.hpp"
