#pragma once

// JSON mappings shared by the file-format translation units. Not installed.

#include <string>

#include <json.hpp>

#include "spnn/netcore.hpp"

namespace spnn::detail {

using nlohmann::json;

json network_to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const json& j, const std::string& origin);

json real_vector_to_json(const RVector& v);
RVector real_vector_from_json(const json& j, const std::string& what);
json real_matrix_to_json(const RMatrix& m);
RMatrix real_matrix_from_json(const json& j, const std::string& what);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace spnn::detail
