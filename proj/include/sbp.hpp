#pragma once

#include "sbp/baselines.hpp"
#include "sbp/bench.hpp"
#include "sbp/data.hpp"
#include "sbp/error.hpp"
#include "sbp/example.hpp"
#include "sbp/format.hpp"
#include "sbp/fourier.hpp"
#include "sbp/kernels.hpp"
#include "sbp/loss.hpp"
#include "sbp/model.hpp"
#include "sbp/random.hpp"
#include "sbp/run_record.hpp"
#include "sbp/sbp.hpp"
#include "sbp/waterfill.hpp"
