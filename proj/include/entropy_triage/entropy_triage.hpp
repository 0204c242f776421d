#pragma once

// Umbrella header. Include this to get the full library surface.

#include "entropy_triage/clustering.hpp"
#include "entropy_triage/commands.hpp"
#include "entropy_triage/dataset.hpp"
#include "entropy_triage/error.hpp"
#include "entropy_triage/evaluation.hpp"
#include "entropy_triage/gateway/backend.hpp"
#include "entropy_triage/gateway/cache.hpp"
#include "entropy_triage/gateway/gateway.hpp"
#include "entropy_triage/gateway/http_backend.hpp"
#include "entropy_triage/gateway/mock_backend.hpp"
#include "entropy_triage/gateway/parallel.hpp"
#include "entropy_triage/pipeline.hpp"
#include "entropy_triage/prompting.hpp"
#include "entropy_triage/report.hpp"
#include "entropy_triage/stats.hpp"
#include "entropy_triage/synth.hpp"
