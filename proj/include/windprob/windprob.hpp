#pragma once

#include "windprob/cqr.hpp"
#include "windprob/diffusion.hpp"
#include "windprob/domain.hpp"
#include "windprob/error.hpp"
#include "windprob/eval.hpp"
#include "windprob/features.hpp"
#include "windprob/gbt.hpp"
#include "windprob/layout_io.hpp"
#include "windprob/ngboost.hpp"
#include "windprob/wake.hpp"
