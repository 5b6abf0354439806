// Copyright 2026 The hetcap Authors
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

#include <string>
#include <string_view>
#include <vector>

namespace hetcap {

/// Shortest round-trip-safe text: 17 significant digits, "%.17g".
std::string format_double(double v);

/// Splits one CSV line on commas, trimming surrounding blanks.
std::vector<std::string> split_csv_line(std::string_view line);

/// Parses a double, rejecting trailing garbage. Throws std::invalid_argument.
double parse_double(std::string_view text);

}  // namespace hetcap
