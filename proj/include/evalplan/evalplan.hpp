#pragma once

#include "evalplan/bias.hpp"
#include "evalplan/binom.hpp"
#include "evalplan/category.hpp"
#include "evalplan/date.hpp"
#include "evalplan/error.hpp"
#include "evalplan/format.hpp"
#include "evalplan/ingest.hpp"
#include "evalplan/normal.hpp"
#include "evalplan/parallel.hpp"
#include "evalplan/planner.hpp"
#include "evalplan/random.hpp"
#include "evalplan/roc.hpp"
#include "evalplan/timedelay.hpp"
#include "evalplan/types.hpp"
