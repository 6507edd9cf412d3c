#pragma once

#include "siw/error.hpp"
#include "siw/units.hpp"
#include "siw/waveguide.hpp"
#include "siw/geometry.hpp"
#include "siw/layout_io.hpp"
#include "siw/network.hpp"
#include "siw/touchstone.hpp"
#include "siw/fdfd.hpp"
#include "siw/optimizer.hpp"
#include "siw/presets.hpp"
