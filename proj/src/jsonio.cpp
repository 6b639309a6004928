#include "mileaks/jsonio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mileaks/errors.hpp"

namespace mileaks {

namespace {

std::string format_g(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

void dump_rec(const nlohmann::json& v, std::string& out, int indent,
              int depth) {
  const auto pad = [&](int d) {
    if (indent >= 0) {
      out.push_back('\n');
      out.append(static_cast<std::size_t>(indent) * d, ' ');
    }
  };
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        pad(depth + 1);
        out += nlohmann::json(it.key()).dump();
        out.push_back(':');
        if (indent >= 0) out.push_back(' ');
        dump_rec(it.value(), out, indent, depth + 1);
      }
      pad(depth);
      out.push_back('}');
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out.push_back('[');
      bool first = true;
      for (const auto& e : v) {
        if (!first) out.push_back(',');
        first = false;
        pad(depth + 1);
        dump_rec(e, out, indent, depth + 1);
      }
      pad(depth);
      out.push_back(']');
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_g17(v.get<double>());
      return;
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string format_g17(double v) { return format_g(v, "%.17g"); }

std::string format_g12(double v) { return format_g(v, "%.12g"); }

std::string dump_json17(const nlohmann::json& doc, int indent) {
  std::string out;
  dump_rec(doc, out, indent, 0);
  return out;
}

void check_keys(const nlohmann::json& obj,
                std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!obj.is_object())
    throw ValidationError(context + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok)
      throw ValidationError(context + ": unknown field '" + it.key() + "'");
  }
}

nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
  return doc;
}

void write_json_file(const std::string& path, const nlohmann::json& doc,
                     int indent) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << dump_json17(doc, indent) << "\n";
}

}  // namespace mileaks
