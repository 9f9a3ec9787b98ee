#pragma once

#include "ptqm/types.hpp"
#include "ptqm/pt_model.hpp"
#include "ptqm/metric_dynamics.hpp"
#include "ptqm/loop_path.hpp"
#include "ptqm/evolution.hpp"
#include "ptqm/geometric_phase.hpp"
#include "ptqm/hermitian_map.hpp"
