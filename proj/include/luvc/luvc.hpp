// Copyright 2026 The LUVC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "luvc/errors.hpp"
#include "luvc/fft.hpp"
#include "luvc/grid_io.hpp"
#include "luvc/heatmap.hpp"
#include "luvc/image.hpp"
#include "luvc/matrix.hpp"
#include "luvc/metrics.hpp"
#include "luvc/model.hpp"
#include "luvc/oim.hpp"
#include "luvc/pipeline.hpp"
#include "luvc/schedule_io.hpp"
#include "luvc/spectral.hpp"
#include "luvc/tensor.hpp"
#include "luvc/theory.hpp"
