#pragma once

// Core library. The PNG and JSON adapters (png_io.hpp, serialize.hpp, fixture_io.hpp) are
// separate so that the core only needs Eigen.

#include "softwarp/affine.hpp"
#include "softwarp/config.hpp"
#include "softwarp/error.hpp"
#include "softwarp/evaluate.hpp"
#include "softwarp/fixture.hpp"
#include "softwarp/losses.hpp"
#include "softwarp/metrics.hpp"
#include "softwarp/part_matching.hpp"
#include "softwarp/part_transform.hpp"
#include "softwarp/point.hpp"
#include "softwarp/rasterize.hpp"
#include "softwarp/render.hpp"
#include "softwarp/sampler.hpp"
#include "softwarp/tensor.hpp"
#include "softwarp/tps.hpp"
#include "softwarp/warp_grid.hpp"
#include "softwarp/warping_block.hpp"
