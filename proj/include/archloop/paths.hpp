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

#ifndef ARCHLOOP_PATHS_HPP
#define ARCHLOOP_PATHS_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace archloop {

/// True for a non-empty relative path with no `..` segments, no root, no
/// backslashes and no NUL bytes, naming a file below the root.
bool is_safe_relative_path(std::string_view path);

/// Joins `relative` under `root`, throwing PathEscapeError when the result
/// would leave `root`.
std::filesystem::path confine(const std::filesystem::path& root,
                              std::string_view relative);

/// Writes `content` to `path` through a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

/// Reads a whole file. Throws IoError (not_found set when absent).
std::string read_file(const std::filesystem::path& path);

}  // namespace archloop

#endif  // ARCHLOOP_PATHS_HPP
