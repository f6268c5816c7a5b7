// Copyright 2026 The qcorridor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qcorridor/errors.hpp"
#include "qcorridor/random.hpp"
#include "qcorridor/parallel.hpp"
#include "qcorridor/stats.hpp"
#include "qcorridor/core.hpp"
#include "qcorridor/selective.hpp"
#include "qcorridor/stochastic.hpp"
#include "qcorridor/ensemble.hpp"
#include "qcorridor/nonselective.hpp"
#include "qcorridor/projective.hpp"
#include "qcorridor/monitor.hpp"
#include "qcorridor/discrete.hpp"
