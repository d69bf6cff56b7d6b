#pragma once

#include "ranrac/core/errors.hpp"
#include "ranrac/core/format.hpp"
#include "ranrac/core/parallel.hpp"
#include "ranrac/core/random.hpp"
#include "ranrac/core/types.hpp"

#include "ranrac/model/field_model.hpp"
#include "ranrac/model/grid_field.hpp"
#include "ranrac/model/latent_ridge_field.hpp"

#include "ranrac/consensus/engine.hpp"

#include "ranrac/analytics/convergence.hpp"

#include "ranrac/occlusion/occlusion.hpp"

#include "ranrac/harness/config.hpp"
#include "ranrac/harness/corruption.hpp"
#include "ranrac/harness/dataset_io.hpp"
#include "ranrac/harness/experiment.hpp"
#include "ranrac/harness/metrics.hpp"
#include "ranrac/harness/pnm_io.hpp"
#include "ranrac/harness/scene.hpp"
