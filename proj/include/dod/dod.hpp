/*
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

#pragma once

#include "dod/engine/materialize.hpp"
#include "dod/fourc/classify.hpp"
#include "dod/index/discovery_index.hpp"
#include "dod/present/multi_row.hpp"
#include "dod/present/summary.hpp"
#include "dod/search/candidates.hpp"
#include "dod/search/join_graph.hpp"
#include "dod/service/cli.hpp"
#include "dod/service/http.hpp"
#include "dod/service/pipeline.hpp"
#include "dod/service/session.hpp"
