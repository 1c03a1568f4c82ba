#pragma once

#include "systole/error.hpp"
#include "systole/parallel.hpp"
#include "systole/random.hpp"
#include "systole/sphere_core.hpp"
#include "systole/quadrature.hpp"
#include "systole/conformal_metric.hpp"
#include "systole/distance.hpp"
#include "systole/expression.hpp"
#include "systole/football.hpp"
#include "systole/integral_geometry.hpp"
#include "systole/polyloop.hpp"
#include "systole/hyperelliptic.hpp"
#include "systole/loop_surgery.hpp"
#include "systole/pu_verifier.hpp"
