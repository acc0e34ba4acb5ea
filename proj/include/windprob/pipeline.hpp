#pragma once

#include "windprob/windprob.hpp"

#include "windprob/pipeline/ablation.hpp"
#include "windprob/pipeline/config.hpp"
#include "windprob/pipeline/csv_io.hpp"
#include "windprob/pipeline/dataset.hpp"
#include "windprob/pipeline/filters.hpp"
#include "windprob/pipeline/heads.hpp"
#include "windprob/pipeline/manifest.hpp"
#include "windprob/pipeline/search.hpp"
#include "windprob/pipeline/split.hpp"
#include "windprob/pipeline/synthetic.hpp"
#include "windprob/pipeline/workflow.hpp"
