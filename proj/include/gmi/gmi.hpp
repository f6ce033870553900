/*
 * Copyright 2026 The gmi-select Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#define GMI_VERSION "0.3.0"

#include "gmi/dataset.hpp"
#include "gmi/emst.hpp"
#include "gmi/error.hpp"
#include "gmi/experiments.hpp"
#include "gmi/fr_estimator.hpp"
#include "gmi/oracle.hpp"
#include "gmi/random.hpp"
#include "gmi/selection.hpp"
