// Copyright 2026 The Archloop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ARCHLOOP_TEXTDIFF_HPP
#define ARCHLOOP_TEXTDIFF_HPP

#include <string>
#include <string_view>

namespace archloop {

/// Line-based unified diff (`---`/`+++` headers, `@@` hunks). Empty when the
/// texts are equal. A missing final newline is marked the way GNU diff does.
std::string unified_diff(std::string_view before, std::string_view after,
                         std::string_view before_label, std::string_view after_label,
                         unsigned context = 3);

}  // namespace archloop

#endif  // ARCHLOOP_TEXTDIFF_HPP
