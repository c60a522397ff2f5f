// Copyright 2026 The memaudit Authors.
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

#ifndef MEMAUDIT_MEMAUDIT_HPP_
#define MEMAUDIT_MEMAUDIT_HPP_

#include "memaudit/backend.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/demo.hpp"
#include "memaudit/detection.hpp"
#include "memaudit/evalset.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/ngram.hpp"
#include "memaudit/pipeline.hpp"
#include "memaudit/remote.hpp"
#include "memaudit/report.hpp"

#endif  // MEMAUDIT_MEMAUDIT_HPP_
