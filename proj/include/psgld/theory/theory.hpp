#pragma once

#include "psgld/theory/bounds.hpp"
#include "psgld/theory/constants.hpp"
#include "psgld/theory/schedule.hpp"
