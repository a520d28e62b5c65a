#pragma once

// Umbrella header for the core library (no OpenSSL dependency).
#include "config.hpp"
#include "evolution.hpp"
#include "hamiltonian.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "path.hpp"
#include "schedule.hpp"
#include "scheduler.hpp"
#include "types.hpp"
