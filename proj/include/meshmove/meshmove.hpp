#pragma once

#include "meshmove/adapt.hpp"
#include "meshmove/config.hpp"
#include "meshmove/corpus.hpp"
#include "meshmove/delaunay.hpp"
#include "meshmove/direct_mover.hpp"
#include "meshmove/errors.hpp"
#include "meshmove/experiment.hpp"
#include "meshmove/fem.hpp"
#include "meshmove/geometry.hpp"
#include "meshmove/mesh.hpp"
#include "meshmove/mesh_gen.hpp"
#include "meshmove/mesh_io.hpp"
#include "meshmove/monitor.hpp"
#include "meshmove/muniform.hpp"
#include "meshmove/nn/model.hpp"
#include "meshmove/nn/model_io.hpp"
#include "meshmove/nn/neural_mover.hpp"
#include "meshmove/nn/optim.hpp"
#include "meshmove/nn/train.hpp"
#include "meshmove/patch.hpp"
#include "meshmove/recovery.hpp"
#include "meshmove/svg.hpp"
