#pragma once

#include "ctxplain/adam.hpp"
#include "ctxplain/augment.hpp"
#include "ctxplain/backbone.hpp"
#include "ctxplain/error.hpp"
#include "ctxplain/explain.hpp"
#include "ctxplain/gzip.hpp"
#include "ctxplain/image.hpp"
#include "ctxplain/image_ops.hpp"
#include "ctxplain/loss.hpp"
#include "ctxplain/manifest.hpp"
#include "ctxplain/metrics.hpp"
#include "ctxplain/model.hpp"
#include "ctxplain/morphology.hpp"
#include "ctxplain/nifti.hpp"
#include "ctxplain/phantom.hpp"
#include "ctxplain/png_io.hpp"
#include "ctxplain/preprocess.hpp"
#include "ctxplain/rng.hpp"
#include "ctxplain/tensor.hpp"
#include "ctxplain/train.hpp"
#include "ctxplain/weights_io.hpp"
