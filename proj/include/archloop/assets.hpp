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

#ifndef ARCHLOOP_ASSETS_HPP
#define ARCHLOOP_ASSETS_HPP

#include <optional>
#include <string_view>
#include <vector>

// Text assets (prompt templates, HDL bodies, the reference blueprint)
// compiled into the library at build time.
namespace archloop::assets {

std::optional<std::string_view> find(std::string_view name);
std::string_view get(std::string_view name);
std::vector<std::string_view> list();

}  // namespace archloop::assets

#endif  // ARCHLOOP_ASSETS_HPP
