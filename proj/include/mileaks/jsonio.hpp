#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

namespace mileaks {

// Real numbers in model files, manifests, and wire bodies are written with
// 17 significant digits so a parse recovers the exact double and remote and
// in-process runs agree bit-for-bit.
std::string format_g17(double v);

// CSV feature precision.
std::string format_g12(double v);

// Serialize a json document, formatting every floating-point number with
// format_g17. indent < 0 means compact.
std::string dump_json17(const nlohmann::json& doc, int indent = -1);

// Schema guard: rejects keys outside `allowed`, naming the offending field.
void check_keys(const nlohmann::json& obj,
                std::initializer_list<const char*> allowed,
                const std::string& context);

nlohmann::json parse_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc,
                     int indent = 2);

}  // namespace mileaks
