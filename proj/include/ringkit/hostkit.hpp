#pragma once

#include "ringkit/hostkit/calibration.hpp"
#include "ringkit/hostkit/dashboard.hpp"
#include "ringkit/hostkit/discovery.hpp"
#include "ringkit/hostkit/env_file.hpp"
#include "ringkit/hostkit/json.hpp"
#include "ringkit/hostkit/offline.hpp"
#include "ringkit/hostkit/render.hpp"
#include "ringkit/hostkit/session.hpp"
#include "ringkit/hostkit/session_io.hpp"
