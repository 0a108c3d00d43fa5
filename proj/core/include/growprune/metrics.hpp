/*
 * Copyright 2026 The growprune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Metrics CSV: a schema comment line, a header row, one row per
// (method, update). Numbers are written with fixed precision so identical
// runs give identical bytes.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "growprune/orchestrator.hpp"

namespace growprune {

inline constexpr const char* kMetricsSchema = "# growprune-metrics v1";

const std::vector<std::string>& metrics_columns();

std::string metrics_header();
std::string metrics_row(const RunMetricsRow& row);
std::string metrics_csv(const std::vector<RunMetricsRow>& rows);

/// FormatError on a wrong schema line, header or malformed row.
std::vector<RunMetricsRow> parse_metrics_csv(const std::string& text);
std::vector<RunMetricsRow> read_metrics(const std::filesystem::path& path);

/// Creates the file with schema and header when absent, then appends.
void append_metrics(const std::filesystem::path& path, const std::vector<RunMetricsRow>& rows);
void write_metrics(const std::filesystem::path& path, const std::vector<RunMetricsRow>& rows);

}  // namespace growprune
