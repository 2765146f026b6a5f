#pragma once

#include "lyap/core/describe.hpp"
#include "lyap/core/error.hpp"
#include "lyap/core/report.hpp"
#include "lyap/core/sampler.hpp"
#include "lyap/core/setting.hpp"
#include "lyap/core/stable.hpp"
#include "lyap/classk.hpp"
#include "lyap/flows.hpp"
#include "lyap/lyapunov.hpp"
#include "lyap/matnum.hpp"
#include "lyap/classical.hpp"
#include "lyap/kalman.hpp"
#include "lyap/enriched.hpp"
