#pragma once

// Umbrella header: threshold-autoregressive connectivity analysis toolkit.

#include "tar4c/config_json.hpp"
#include "tar4c/connectivity.hpp"
#include "tar4c/errors.hpp"
#include "tar4c/inference.hpp"
#include "tar4c/ols.hpp"
#include "tar4c/parallel.hpp"
#include "tar4c/pipeline.hpp"
#include "tar4c/rng.hpp"
#include "tar4c/series.hpp"
#include "tar4c/simulate.hpp"
#include "tar4c/spectral.hpp"
#include "tar4c/stats.hpp"
#include "tar4c/tar.hpp"
