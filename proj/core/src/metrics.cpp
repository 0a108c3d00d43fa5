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

#include "growprune/metrics.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "growprune/errors.hpp"

namespace growprune {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string flags(const RunMetricsRow& r) {
  std::string f;
  if (r.merged_only) f = "merged_only";
  if (!r.recoverable) f += f.empty() ? "nonrecoverable" : "|nonrecoverable";
  return f.empty() ? "-" : f;
}

template <typename T>
T number(const std::string& s, std::uint64_t offset, int base = 10) {
  T v{};
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<T>)
    r = std::from_chars(s.data(), s.data() + s.size(), v);
  else
    r = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw FormatError("metrics: bad numeric field '" + s + "'", offset);
  return v;
}

}  // namespace

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> c = {
      "method",          "update",          "data_fraction",    "train_samples",
      "exposure_hash",   "val_error",       "test_error",       "active_params",
      "total_params",    "normalized_epochs", "training_epochs", "prune_epochs",
      "growth_passes",   "prune_iterations", "recoverable",     "flags"};
  return c;
}

std::string metrics_header() {
  std::string h;
  for (const auto& c : metrics_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::string metrics_row(const RunMetricsRow& r) {
  std::string s = to_string(r.method);
  s += "," + std::to_string(r.update);
  s += "," + fixed(r.data_fraction, 6);
  s += "," + std::to_string(r.train_samples);
  s += "," + hex64(r.exposure_hash);
  s += "," + fixed(r.val_error, 6);
  s += "," + fixed(r.test_error, 6);
  s += "," + std::to_string(r.active_parameters);
  s += "," + std::to_string(r.total_parameters);
  s += "," + fixed(r.normalized_epochs, 4);
  s += "," + fixed(r.training_epochs, 4);
  s += "," + std::to_string(r.prune_epochs);
  s += "," + std::to_string(r.growth_passes);
  s += "," + std::to_string(r.prune_iterations);
  s += "," + std::string(r.recoverable ? "1" : "0");
  s += "," + flags(r);
  return s;
}

std::string metrics_csv(const std::vector<RunMetricsRow>& rows) {
  std::string s = std::string(kMetricsSchema) + "\n" + metrics_header() + "\n";
  for (const auto& r : rows) s += metrics_row(r) + "\n";
  return s;
}

std::vector<RunMetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::uint64_t offset = 0;
  auto next = [&](std::string& out) {
    if (!std::getline(is, out)) return false;
    offset += out.size() + 1;
    return true;
  };
  if (!next(line) || line != kMetricsSchema) throw FormatError("metrics: missing schema line", 0);
  const auto header_at = offset;
  if (!next(line) || line != metrics_header()) throw FormatError("metrics: unexpected header", header_at);

  std::vector<RunMetricsRow> rows;
  while (true) {
    const auto at = offset;
    if (!next(line)) break;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != metrics_columns().size())
      throw FormatError("metrics: expected " + std::to_string(metrics_columns().size()) + " fields", at);
    RunMetricsRow r;
    try {
      r.method = parse_method(f[0]);
    } catch (const InputError& e) {
      throw FormatError(e.what(), at);
    }
    r.update = number<std::size_t>(f[1], at);
    r.data_fraction = number<double>(f[2], at);
    r.train_samples = number<std::size_t>(f[3], at);
    r.exposure_hash = number<std::uint64_t>(f[4], at, 16);
    r.val_error = number<double>(f[5], at);
    r.test_error = number<double>(f[6], at);
    r.active_parameters = number<std::size_t>(f[7], at);
    r.total_parameters = number<std::size_t>(f[8], at);
    r.normalized_epochs = number<double>(f[9], at);
    r.training_epochs = number<double>(f[10], at);
    r.prune_epochs = number<std::size_t>(f[11], at);
    r.growth_passes = number<std::size_t>(f[12], at);
    r.prune_iterations = number<std::size_t>(f[13], at);
    r.recoverable = f[14] == "1";
    r.merged_only = f[15].find("merged_only") != std::string::npos;
    rows.push_back(r);
  }
  return rows;
}

std::vector<RunMetricsRow> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open metrics file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str());
}

void append_metrics(const std::filesystem::path& path, const std::vector<RunMetricsRow>& rows) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (!fresh) read_metrics(path);  // refuse to append to a foreign file
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw InputError("cannot write metrics file " + path.string());
  if (fresh) out << kMetricsSchema << "\n" << metrics_header() << "\n";
  for (const auto& r : rows) out << metrics_row(r) << "\n";
}

void write_metrics(const std::filesystem::path& path, const std::vector<RunMetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write metrics file " + path.string());
  out << metrics_csv(rows);
}

}  // namespace growprune
