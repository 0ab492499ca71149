#pragma once

#include "cache.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "log_base.hpp"
#include "oracle.hpp"
#include "parent_set.hpp"
#include "pruning.hpp"
#include "scoring.hpp"
#include "version.hpp"
