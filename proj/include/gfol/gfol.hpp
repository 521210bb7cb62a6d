#pragma once

#include "gfol/error.hpp"
#include "gfol/flow.hpp"
#include "gfol/geometry.hpp"
#include "gfol/linalg.hpp"
#include "gfol/manifest.hpp"
#include "gfol/model.hpp"
#include "gfol/structures.hpp"
