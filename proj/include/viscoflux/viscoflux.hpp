#pragma once

#include "viscoflux/errors.hpp"
#include "viscoflux/quadrature.hpp"
#include "viscoflux/material.hpp"
#include "viscoflux/radial_solver.hpp"
#include "viscoflux/planar_fields.hpp"
#include "viscoflux/flow_map.hpp"
#include "viscoflux/diagnostics.hpp"
#include "viscoflux/blowup.hpp"
#include "viscoflux/config.hpp"
#include "viscoflux/io.hpp"
#include "viscoflux/runner.hpp"
#include "viscoflux/acceptance.hpp"
