/*
 Copyright 2026 The stc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef STC_STC_HPP
#define STC_STC_HPP

#include "stc/errors.hpp"
#include "stc/linalg.hpp"
#include "stc/system.hpp"
#include "stc/tables.hpp"
#include "stc/table_cache.hpp"
#include "stc/plant.hpp"
#include "stc/trigger.hpp"
#include "stc/gain.hpp"
#include "stc/engine.hpp"
#include "stc/io.hpp"
#include "stc/experiment.hpp"

#endif  // STC_STC_HPP
