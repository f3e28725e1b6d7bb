/// Umbrella header for the torsod library.
#pragma once

#include "lattice.hpp"
#include "extraction.hpp"
#include "sod.hpp"
#include "oracle.hpp"
#include "json_io.hpp"
#include "model.hpp"
#include "verify.hpp"
#include "commands.hpp"
