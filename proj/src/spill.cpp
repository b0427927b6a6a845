#include "hap/spill.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hap/error.hpp"

namespace hap {
namespace {

void append_real(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_int(std::string& out, long long v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

[[noreturn]] void parse_fail(std::size_t line_no, std::string_view what) {
  throw Error(ErrorCode::ParseError, "spill line " + std::to_string(line_no) + ": " +
                                         std::string(what));
}

std::string_view next_field(std::string_view& rest, char sep) {
  const auto pos = rest.find(sep);
  std::string_view field = rest.substr(0, pos);
  rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
  return field;
}

template <class T>
T parse_number(std::string_view text, std::size_t line_no, std::string_view what) {
  T value{};
  const char* end = text.data() + text.size();
  auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end || text.empty()) {
    parse_fail(line_no, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

void append_record(std::string& out, const KeyedRecord& record) {
  out += to_string(record.key.orientation);
  out += '\t';
  append_int(out, record.key.index);
  out += '\t';
  append_int(out, record.key.level);
  out += '\t';
  out += to_string(record.key.tag);
  out += '\t';
  if (const auto* v = std::get_if<std::vector<double>>(&record.value)) {
    for (std::size_t k = 0; k < v->size(); ++k) {
      if (k) out += ',';
      append_real(out, (*v)[k]);
    }
  } else {
    const auto& sp = std::get<ScalarPayload>(record.value);
    out += '@';
    append_int(out, sp.source);
    out += ':';
    out += to_string(sp.tag);
    out += ':';
    append_real(out, sp.value);
  }
  out += '\n';
}

std::string format_record(const KeyedRecord& record) {
  std::string out;
  append_record(out, record);
  return out;
}

KeyedRecord parse_record(std::string_view line, std::size_t line_no) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  std::string_view rest = line;
  const auto orient_text = next_field(rest, '\t');
  const auto index_text = next_field(rest, '\t');
  const auto level_text = next_field(rest, '\t');
  const auto tag_text = next_field(rest, '\t');
  const std::string_view value_text = rest;

  KeyedRecord rec;
  auto orientation = parse_orientation(orient_text);
  if (!orientation) parse_fail(line_no, "unknown orientation '" + std::string(orient_text) + "'");
  auto tag = parse_tag(tag_text);
  if (!tag) parse_fail(line_no, "unknown tag '" + std::string(tag_text) + "'");
  rec.key = {*orientation, parse_number<int>(level_text, line_no, "level"), *tag,
             parse_number<int>(index_text, line_no, "index")};

  if (!value_text.empty() && value_text.front() == '@') {
    std::string_view body = value_text.substr(1);
    ScalarPayload sp;
    sp.source = parse_number<int>(next_field(body, ':'), line_no, "scalar source");
    const auto stag_text = next_field(body, ':');
    auto stag = parse_tag(stag_text);
    if (!stag) parse_fail(line_no, "unknown scalar tag '" + std::string(stag_text) + "'");
    sp.tag = *stag;
    sp.value = parse_number<double>(body, line_no, "scalar value");
    rec.value = sp;
    return rec;
  }

  std::vector<double> values;
  std::string_view vals = value_text;
  while (!vals.empty()) {
    values.push_back(parse_number<double>(next_field(vals, ','), line_no, "value"));
  }
  if (values.empty()) parse_fail(line_no, "empty value list");
  rec.value = std::move(values);
  return rec;
}

void write_spill_file(const std::filesystem::path& path, std::span<const KeyedRecord> records) {
  std::string buffer;
  for (const auto& r : records) append_record(buffer, r);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::SpillIOFailure, "cannot open " + path.string() + " for writing");
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::SpillIOFailure, "write failed for " + path.string());
}

std::vector<KeyedRecord> read_spill_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SpillIOFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = std::move(ss).str();

  std::vector<KeyedRecord> records;
  std::string_view rest = text;
  std::size_t line_no = 0;
  while (!rest.empty()) {
    ++line_no;
    const auto line = next_field(rest, '\n');
    if (line.empty()) continue;
    records.push_back(parse_record(line, line_no));
  }
  return records;
}

}  // namespace hap
