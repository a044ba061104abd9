#pragma once

#include "augment.hpp"
#include "color.hpp"
#include "dataset.hpp"
#include "deepfeat.hpp"
#include "error.hpp"
#include "features.hpp"
#include "fusion.hpp"
#include "gbdt.hpp"
#include "grid.hpp"
#include "handcrafted.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "resize.hpp"
#include "split.hpp"
#include "svm.hpp"
#include "synth.hpp"
