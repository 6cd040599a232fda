#pragma once

#include "activemask/automaton.hpp"
#include "activemask/domain.hpp"
#include "activemask/error.hpp"
#include "activemask/io.hpp"
#include "activemask/operators.hpp"
#include "activemask/segment.hpp"
#include "activemask/skew.hpp"
#include "activemask/spectral.hpp"
#include "activemask/verify.hpp"
