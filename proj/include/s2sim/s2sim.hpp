#pragma once

#include "s2sim/adapters.hpp"
#include "s2sim/aggregator.hpp"
#include "s2sim/config.hpp"
#include "s2sim/engine.hpp"
#include "s2sim/error.hpp"
#include "s2sim/event_loop.hpp"
#include "s2sim/floor.hpp"
#include "s2sim/harness.hpp"
#include "s2sim/orchestrator.hpp"
#include "s2sim/repair.hpp"
#include "s2sim/report.hpp"
#include "s2sim/rng.hpp"
#include "s2sim/text.hpp"
#include "s2sim/time.hpp"
#include "s2sim/trace.hpp"
#include "s2sim/vad.hpp"
