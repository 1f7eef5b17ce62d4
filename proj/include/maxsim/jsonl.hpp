#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "maxsim/error.hpp"

namespace maxsim {

// All line-delimited files use one canonically ordered JSON object per line.
using Json = nlohmann::ordered_json;

void for_each_jsonl_line(std::istream& in, const std::function<void(const Json&, size_t line_no)>& fn);
void for_each_jsonl_file(const std::filesystem::path& path,
                         const std::function<void(const Json&, size_t line_no)>& fn);

std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace maxsim
