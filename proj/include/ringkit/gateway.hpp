#pragma once

#include "ringkit/gateway/api.hpp"
#include "ringkit/gateway/hub.hpp"
#include "ringkit/gateway/server.hpp"
