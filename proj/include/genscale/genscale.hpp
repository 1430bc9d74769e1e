#pragma once

#include "genscale/corpus/io.hpp"
#include "genscale/corpus/sampling.hpp"
#include "genscale/corpus/types.hpp"
#include "genscale/corpus/validation.hpp"
#include "genscale/ratings.hpp"
#include "genscale/report/histogram.hpp"
#include "genscale/report/pipeline.hpp"
#include "genscale/report/tables.hpp"
#include "genscale/service/batching.hpp"
#include "genscale/service/config.hpp"
#include "genscale/service/http.hpp"
#include "genscale/service/study.hpp"
#include "genscale/sim/simulate.hpp"
#include "genscale/sim/synthetic_corpus.hpp"
#include "genscale/stats/aggregate.hpp"
#include "genscale/stats/cross_validation.hpp"
#include "genscale/stats/features.hpp"
#include "genscale/stats/icc.hpp"
#include "genscale/stats/logistic.hpp"
#include "genscale/stats/wilcoxon.hpp"
