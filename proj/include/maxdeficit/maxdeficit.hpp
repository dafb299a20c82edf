#pragma once

#include "maxdeficit/errors.hpp"
#include "maxdeficit/numerics.hpp"
#include "maxdeficit/model.hpp"
#include "maxdeficit/distortion.hpp"
#include "maxdeficit/deficit.hpp"
#include "maxdeficit/rng.hpp"
#include "maxdeficit/simulate.hpp"
#include "maxdeficit/measures.hpp"
#include "maxdeficit/allocate.hpp"
#include "maxdeficit/report.hpp"
