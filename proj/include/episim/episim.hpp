#pragma once

#include "episim/asymp.hpp"
#include "episim/dists.hpp"
#include "episim/endemic.hpp"
#include "episim/errors.hpp"
#include "episim/exact.hpp"
#include "episim/household.hpp"
#include "episim/infer.hpp"
#include "episim/multitype.hpp"
#include "episim/parallel.hpp"
#include "episim/policy.hpp"
#include "episim/rng.hpp"
#include "episim/sim.hpp"
#include "episim/vacc.hpp"

namespace episim {
inline constexpr const char* kVersion = "0.1.0";
}
