// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "tfmd/datagen.hpp"
#include "tfmd/error.hpp"

namespace tfmd {
namespace {

constexpr std::string_view kMagic = "#tfmd-dataset v1";
constexpr std::size_t kFieldsPerRecord = 4 + 2 * kNumModalities;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::kParse, "line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    parse_error(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

void append_block(std::string& out, const std::vector<float>& block) {
  char buf[32];
  for (std::size_t j = 0; j < block.size(); ++j) {
    if (j > 0) out.push_back(' ');
    const auto res = std::to_chars(buf, buf + sizeof(buf), block[j],
                                   std::chars_format::general, 9);
    out.append(buf, res.ptr);
  }
}

std::vector<float> parse_block(std::string_view field, std::size_t width,
                               std::size_t line, char modality) {
  std::vector<float> out;
  out.reserve(width);
  if (!field.empty()) {
    for (std::string_view tok : split(field, ' ')) {
      out.push_back(parse_number<float>(tok, line, "feature value"));
    }
  }
  if (out.size() != width) {
    fail(ErrorCode::kSchema, "line " + std::to_string(line) + ": block '" +
                                 std::string(1, modality) + "' has " +
                                 std::to_string(out.size()) +
                                 " values, header declares " +
                                 std::to_string(width));
  }
  return out;
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");

  os << kMagic << " classes=" << dataset.n_classes << " dims=";
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    os << (m ? "," : "") << dataset.dims[m];
  }
  os << '\n';

  std::string line;
  for (const Record& r : dataset.records) {
    line.clear();
    line += r.pair_id;
    line += '\t' + std::to_string(r.drug_a);
    line += '\t' + std::to_string(r.drug_b);
    line += '\t' + std::to_string(r.label);
    for (const DrugFeatures* f : {&r.features_a, &r.features_b}) {
      for (std::size_t m = 0; m < kNumModalities; ++m) {
        line += '\t';
        append_block(line, (*f)[m]);
      }
    }
    line += '\n';
    os << line;
  }
  if (!os) fail(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");

  Dataset out;
  std::string text;
  std::size_t line_no = 1;
  if (!std::getline(is, text)) parse_error(1, "missing header");
  {
    const std::vector<std::string_view> parts = split(text, ' ');
    if (parts.size() != 4 || std::string(parts[0]) + " " + std::string(parts[1]) != kMagic ||
        !parts[2].starts_with("classes=") || !parts[3].starts_with("dims=")) {
      parse_error(1, "expected '" + std::string(kMagic) +
                         " classes=<N> dims=<g>,<s>,<t>,<e>'");
    }
    out.n_classes = parse_number<std::size_t>(parts[2].substr(8), 1, "class count");
    const std::vector<std::string_view> dims = split(parts[3].substr(5), ',');
    if (dims.size() != kNumModalities) parse_error(1, "dims needs 4 widths");
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      out.dims[m] = parse_number<std::size_t>(dims[m], 1, "width");
    }
  }

  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    const std::vector<std::string_view> fields = split(text, '\t');
    if (fields.size() != kFieldsPerRecord) {
      parse_error(line_no, "expected " + std::to_string(kFieldsPerRecord) +
                               " tab-separated fields, found " +
                               std::to_string(fields.size()));
    }
    Record r;
    r.pair_id = std::string(fields[0]);
    r.drug_a = parse_number<std::uint32_t>(fields[1], line_no, "drug id");
    r.drug_b = parse_number<std::uint32_t>(fields[2], line_no, "drug id");
    r.label = parse_number<std::size_t>(fields[3], line_no, "label");
    if (r.label >= out.n_classes) {
      fail(ErrorCode::kSchema, "line " + std::to_string(line_no) + ": label " +
                                   std::to_string(r.label) + " >= classes=" +
                                   std::to_string(out.n_classes));
    }
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      r.features_a[m] = parse_block(fields[4 + m], out.dims[m], line_no,
                                    kModalityLetters[m]);
      r.features_b[m] = parse_block(fields[4 + kNumModalities + m],
                                    out.dims[m], line_no, kModalityLetters[m]);
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace tfmd
