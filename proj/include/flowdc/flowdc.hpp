// Copyright 2026 The FlowDC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "flowdc/core_flow.hpp"
#include "flowdc/decay.hpp"
#include "flowdc/diagnostics.hpp"
#include "flowdc/error.hpp"
#include "flowdc/field.hpp"
#include "flowdc/gaussian_field.hpp"
#include "flowdc/latent.hpp"
#include "flowdc/ortho.hpp"
#include "flowdc/pipeline.hpp"
#include "flowdc/prompts.hpp"
#include "flowdc/trace.hpp"
