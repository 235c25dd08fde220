#pragma once

#include "dbs/error.hpp"
#include "dbs/core.hpp"
#include "dbs/cluster_sim.hpp"
#include "dbs/sgd_lab.hpp"
#include "dbs/sgd_checks.hpp"
#include "dbs/report.hpp"
#include "dbs/scenario.hpp"
