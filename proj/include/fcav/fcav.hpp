#pragma once

#include "fcav/assumptions.hpp"
#include "fcav/bethe.hpp"
#include "fcav/bp.hpp"
#include "fcav/common.hpp"
#include "fcav/degree.hpp"
#include "fcav/ensemble.hpp"
#include "fcav/exact.hpp"
#include "fcav/graph.hpp"
#include "fcav/graphmodel.hpp"
#include "fcav/io.hpp"
#include "fcav/model.hpp"
#include "fcav/models.hpp"
#include "fcav/parallel.hpp"
#include "fcav/weights.hpp"
