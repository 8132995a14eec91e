#pragma once

#include "poseaug/analysis.hpp"
#include "poseaug/augment.hpp"
#include "poseaug/config.hpp"
#include "poseaug/data.hpp"
#include "poseaug/error.hpp"
#include "poseaug/geometry.hpp"
#include "poseaug/losses.hpp"
#include "poseaug/metrics.hpp"
#include "poseaug/model.hpp"
#include "poseaug/parallel.hpp"
#include "poseaug/png_io.hpp"
#include "poseaug/rng.hpp"
#include "poseaug/ssltrain.hpp"
#include "poseaug/tensor_file.hpp"
#include "poseaug/types.hpp"
