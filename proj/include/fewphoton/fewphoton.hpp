#pragma once

#include "fewphoton/dynamics.hpp"
#include "fewphoton/error.hpp"
#include "fewphoton/linalg.hpp"
#include "fewphoton/operators.hpp"
#include "fewphoton/pipeline.hpp"
#include "fewphoton/quasiprob.hpp"
#include "fewphoton/radiation.hpp"
#include "fewphoton/spaces.hpp"
#include "fewphoton/squeezing.hpp"
#include "fewphoton/states.hpp"
