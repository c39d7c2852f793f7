#pragma once

#include "resonance/common.hpp"
#include "resonance/expr.hpp"
#include "resonance/spectrum.hpp"
#include "resonance/model.hpp"
#include "resonance/integrate.hpp"
#include "resonance/conditions.hpp"
#include "resonance/apriori.hpp"
#include "resonance/solver.hpp"
#include "resonance/radial.hpp"
#include "resonance/pipeline.hpp"
