#pragma once

#include "ssmstream/bf16.hpp"
#include "ssmstream/errors.hpp"
#include "ssmstream/graph.hpp"
#include "ssmstream/kernels.hpp"
#include "ssmstream/metrics.hpp"
#include "ssmstream/model_io.hpp"
#include "ssmstream/oracle.hpp"
#include "ssmstream/plan.hpp"
#include "ssmstream/run_metrics.hpp"
#include "ssmstream/runtime.hpp"
#include "ssmstream/ssm.hpp"
#include "ssmstream/stream_io.hpp"
#include "ssmstream/temporal.hpp"
#include "ssmstream/tensor.hpp"
