#pragma once

#include "entropy_triage/stats/inference.hpp"
#include "entropy_triage/stats/least_squares.hpp"
#include "entropy_triage/stats/special_functions.hpp"
