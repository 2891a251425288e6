// Copyright 2026 The tokenshap Authors.
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

#ifndef TOKENSHAP_TEXTIO_H_
#define TOKENSHAP_TEXTIO_H_

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tokenshap {

using CsvRow = std::vector<std::string>;

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF endings.
// Blank lines are skipped.
std::vector<CsvRow> read_csv(std::istream& in);
std::vector<CsvRow> read_csv_file(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, const CsvRow& row);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view data);

std::string to_lower_ascii(std::string_view text);

}  // namespace tokenshap

#endif  // TOKENSHAP_TEXTIO_H_
