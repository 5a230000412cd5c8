#pragma once

// Everything except the CLI layer (workbench.hpp), which needs the vendored JSON header.

#include "dynwork/error.hpp"
#include "dynwork/bigreal.hpp"
#include "dynwork/poly.hpp"
#include "dynwork/matrix.hpp"
#include "dynwork/spectrum.hpp"
#include "dynwork/cone.hpp"
#include "dynwork/model.hpp"
#include "dynwork/heights.hpp"
#include "dynwork/atiyah.hpp"
#include "dynwork/good_eigenspace.hpp"
