#pragma once

// Umbrella header: pulls in the full library.

#include "core.hpp"
#include "numerics/pca.hpp"
#include "numerics/least_squares.hpp"
#include "numerics/kmeans.hpp"
#include "data/dataset.hpp"
#include "data/mnist.hpp"
#include "data/cifar10.hpp"
#include "forms/input_form.hpp"
#include "conv/feature_map.hpp"
#include "conv/patches.hpp"
#include "conv/saab.hpp"
#include "conv/cpca.hpp"
#include "conv/pipeline.hpp"
#include "fc/pseudo_labels.hpp"
#include "fc/fc_model.hpp"
#include "base/config.hpp"
#include "base/feature_view.hpp"
#include "base/classifier.hpp"
#include "svm/svm.hpp"
#include "ensemble/diversity.hpp"
#include "ensemble/confidence.hpp"
#include "ensemble/ensemble.hpp"
#include "io/model_file.hpp"
#include "cli/config.hpp"
#include "cli/experiment.hpp"
