#pragma once

// Line-delimited text encoding of KeyedRecord streams, the only hand-off
// between chained MapReduce jobs:
//
//   orientation TAB index TAB level TAB tag TAB v0,v1,...,v{N-1}
//
// Reals use the shortest decimal that round-trips; infinities are written as
// `inf` / `-inf`. A scalar payload is written in the value field as
// `@source:tag:value`.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hap/tensors.hpp"

namespace hap {

void append_record(std::string& out, const KeyedRecord& record);
std::string format_record(const KeyedRecord& record);

// Throws ParseError; `line_no` is only used in the message.
KeyedRecord parse_record(std::string_view line, std::size_t line_no = 0);

// Both throw SpillIOFailure on filesystem errors.
void write_spill_file(const std::filesystem::path& path, std::span<const KeyedRecord> records);
std::vector<KeyedRecord> read_spill_file(const std::filesystem::path& path);

}  // namespace hap
