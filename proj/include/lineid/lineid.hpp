#pragma once

#include "lineid/baddata.hpp"
#include "lineid/config.hpp"
#include "lineid/core.hpp"
#include "lineid/design.hpp"
#include "lineid/error.hpp"
#include "lineid/estimators.hpp"
#include "lineid/experiments.hpp"
#include "lineid/fixtures.hpp"
#include "lineid/io.hpp"
#include "lineid/report.hpp"
#include "lineid/simulator.hpp"
