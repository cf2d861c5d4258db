#pragma once

#include "geocon/baselines.hpp"
#include "geocon/bench.hpp"
#include "geocon/chat.hpp"
#include "geocon/dsl.hpp"
#include "geocon/execute.hpp"
#include "geocon/extract.hpp"
#include "geocon/geometry.hpp"
#include "geocon/harness.hpp"
#include "geocon/problem.hpp"
#include "geocon/prompt.hpp"
#include "geocon/rng.hpp"
#include "geocon/simulacra.hpp"
#include "geocon/tool.hpp"
#include "geocon/verifier.hpp"
