#pragma once

#include "isac/channels.hpp"
#include "isac/conic.hpp"
#include "isac/errors.hpp"
#include "isac/linalg.hpp"
#include "isac/model.hpp"
#include "isac/pipeline.hpp"
#include "isac/recover.hpp"
#include "isac/simulate.hpp"
#include "isac/solver.hpp"
#include "isac/verify.hpp"
