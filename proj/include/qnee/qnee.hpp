#pragma once

// Convenience umbrella for the whole toolkit.

#include "qnee/ansatz.hpp"
#include "qnee/checks.hpp"
#include "qnee/hybrid.hpp"
#include "qnee/linalg.hpp"
#include "qnee/neural.hpp"
#include "qnee/parallel.hpp"
#include "qnee/quantum_core.hpp"
#include "qnee/rng.hpp"
#include "qnee/sweep.hpp"
#include "qnee/vqse.hpp"
#include "qnee/xxz.hpp"
