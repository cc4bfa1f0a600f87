// Copyright 2026 The dmace Authors
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

#ifndef DMACE_DMACE_HPP
#define DMACE_DMACE_HPP

#include "dmace/errors.hpp"
#include "dmace/estimators.hpp"
#include "dmace/experiment.hpp"
#include "dmace/json_io.hpp"
#include "dmace/metrics.hpp"
#include "dmace/mnt_model.hpp"
#include "dmace/optimizer.hpp"
#include "dmace/scenario.hpp"
#include "dmace/tensor.hpp"

#endif  // DMACE_DMACE_HPP
