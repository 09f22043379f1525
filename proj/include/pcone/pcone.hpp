#pragma once

#include "pcone/core.hpp"
#include "pcone/spectral.hpp"
#include "pcone/lp.hpp"
#include "pcone/semigroup.hpp"
#include "pcone/cone.hpp"
#include "pcone/obstruction.hpp"
#include "pcone/forge.hpp"
#include "pcone/io.hpp"
#include "pcone/pipeline.hpp"
