#pragma once

#include "gxstpir/capacity.hpp"
#include "gxstpir/error.hpp"
#include "gxstpir/ff.hpp"
#include "gxstpir/grscoef.hpp"
#include "gxstpir/json_io.hpp"
#include "gxstpir/lp.hpp"
#include "gxstpir/model.hpp"
#include "gxstpir/noise.hpp"
#include "gxstpir/rational.hpp"
#include "gxstpir/scheme.hpp"
#include "gxstpir/simnet.hpp"
#include "gxstpir/verify.hpp"
