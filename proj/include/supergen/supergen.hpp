#pragma once

#include "supergen/cache.hpp"
#include "supergen/canvas.hpp"
#include "supergen/config.hpp"
#include "supergen/error.hpp"
#include "supergen/metrics.hpp"
#include "supergen/parallel.hpp"
#include "supergen/pipeline.hpp"
#include "supergen/predictor.hpp"
#include "supergen/report.hpp"
#include "supergen/rng.hpp"
#include "supergen/scene.hpp"
#include "supergen/schedule.hpp"
#include "supergen/tensor_io.hpp"
#include "supergen/tiling.hpp"
#include "supergen/trace.hpp"
