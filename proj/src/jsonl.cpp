#include "maxsim/jsonl.hpp"

#include <sstream>

namespace maxsim {

void for_each_jsonl_line(std::istream& in, const std::function<void(const Json&, size_t)>& fn) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw Error(ErrorCode::kParseError, "invalid JSON on line " + std::to_string(line_no));
    }
    fn(record, line_no);
  }
}

void for_each_jsonl_file(const std::filesystem::path& path,
                         const std::function<void(const Json&, size_t)>& fn) {
  auto in = open_input(path);
  try {
    for_each_jsonl_line(in, fn);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  auto out = open_output(path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

}  // namespace maxsim
