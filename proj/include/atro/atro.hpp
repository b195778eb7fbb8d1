#pragma once

// Umbrella header for the whole library.

#include "atro/attack.hpp"
#include "atro/bounds.hpp"
#include "atro/config.hpp"
#include "atro/datagen.hpp"
#include "atro/error.hpp"
#include "atro/eval.hpp"
#include "atro/ingest.hpp"
#include "atro/io.hpp"
#include "atro/linalg.hpp"
#include "atro/loss.hpp"
#include "atro/model.hpp"
#include "atro/neural.hpp"
#include "atro/rng.hpp"
#include "atro/solver.hpp"
