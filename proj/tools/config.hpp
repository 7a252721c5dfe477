#pragma once

// Strict JSON configs: syntax errors and schema errors both report
// file:line:col. Comments (// and /* */) are accepted; unknown keys are not.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "nevlab/error.hpp"
#include "nevlab/expr.hpp"

namespace nevlab::cli {

using json = nlohmann::ordered_json;

inline std::string pointer_escape(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

/// Byte offset of every value in an (already validated) JSON text, keyed by
/// JSON pointer.
class Locator {
 public:
  explicit Locator(const std::string& text) : s_(text) {
    value("");
  }
  const std::map<std::string, std::size_t>& positions() const { return pos_; }

 private:
  void skip() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i_;
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '/') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '*') {
        const auto end = s_.find("*/", i_ + 2);
        i_ = end == std::string::npos ? s_.size() : end + 2;
      } else {
        break;
      }
    }
  }
  std::string string() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') ++i_;
      if (i_ < s_.size()) out += s_[i_++];
    }
    ++i_;
    return out;
  }
  void value(const std::string& path) {
    skip();
    if (i_ >= s_.size()) return;
    pos_[path] = i_;
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip();
      if (i_ < s_.size() && s_[i_] == '}') {
        ++i_;
        return;
      }
      while (i_ < s_.size()) {
        skip();
        const std::string child = path + "/" + pointer_escape(string());
        skip();
        ++i_;  // ':'
        value(child);
        skip();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          continue;
        }
        ++i_;  // '}'
        return;
      }
    } else if (c == '[') {
      ++i_;
      skip();
      if (i_ < s_.size() && s_[i_] == ']') {
        ++i_;
        return;
      }
      for (int k = 0; i_ < s_.size(); ++k) {
        value(path + "/" + std::to_string(k));
        skip();
        if (i_ < s_.size() && s_[i_] == ',') {
          ++i_;
          continue;
        }
        ++i_;  // ']'
        return;
      }
    } else if (c == '"') {
      string();
    } else {
      while (i_ < s_.size() && std::string_view(",]} \t\r\n/").find(s_[i_]) == std::string_view::npos) ++i_;
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  std::map<std::string, std::size_t> pos_;
};

struct Document {
  std::string file;
  std::string text;
  json root;
  std::map<std::string, std::size_t> positions;

  std::pair<std::size_t, std::size_t> line_col(std::size_t offset) const {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

  /// "file:line:col" of the value at `pointer`, falling back to its parents.
  std::string where(std::string pointer, std::size_t extra = 0) const {
    while (true) {
      const auto it = positions.find(pointer);
      if (it != positions.end()) {
        auto [l, c] = line_col(it->second + extra);
        return file + ":" + std::to_string(l) + ":" + std::to_string(c);
      }
      if (pointer.empty()) return file;
      pointer = pointer.substr(0, pointer.rfind('/'));
      extra = 0;
    }
  }
};

inline Document parse_document(const std::string& text, const std::string& file) {
  Document doc;
  doc.file = file;
  doc.text = text;
  try {
    doc.root = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    const std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
    auto [l, c] = doc.line_col(off);
    std::string msg = e.what();
    // drop the library's own "[json.exception.parse_error.101] parse error at line x, column y:" prefix
    if (const auto p = msg.find(": "); p != std::string::npos && msg.rfind("[json.exception", 0) == 0)
      msg = msg.substr(p + 2);
    throw ConfigError(file + ":" + std::to_string(l) + ":" + std::to_string(c) + ": JSON syntax error: " + msg);
  }
  if (!doc.root.is_object()) throw ConfigError(file + ":1:1: the config must be a JSON object");
  doc.positions = Locator(text).positions();
  return doc;
}

inline Document load_document(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str(), path);
}

/// Typed, key-tracking view of one JSON object. Every value read is written
/// into `resolved` (defaults included); finish() rejects unread keys.
class Obj {
 public:
  Obj(const Document& doc, const json& j, std::string pointer) : doc_(doc), j_(j), ptr_(std::move(pointer)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(doc_.where(ptr_) + ": " + msg); }
  [[noreturn]] void fail_at(const std::string& key, const std::string& msg) const {
    throw ConfigError(doc_.where(child(key)) + ": " + msg);
  }

  std::string child(const std::string& key) const { return ptr_ + "/" + pointer_escape(key); }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) {
    if (!has(key)) fail("missing required key '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }
  const Document& doc() const { return doc_; }
  json& resolved() { return out_; }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (!def) fail("missing required key '" + key + "'");
      out_[key] = *def;
      return *def;
    }
    const auto& v = raw(key);
    if (!v.is_number()) fail_at(key, "'" + key + "' must be a number");
    out_[key] = v.get<double>();
    return v.get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> def = std::nullopt) {
    if (!has(key)) {
      if (!def) fail("missing required key '" + key + "'");
      out_[key] = *def;
      return *def;
    }
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail_at(key, "'" + key + "' must be an integer");
    out_[key] = v.get<long long>();
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    const auto& v = raw(key);
    if (!v.is_boolean()) fail_at(key, "'" + key + "' must be true or false");
    out_[key] = v.get<bool>();
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (!def) fail("missing required key '" + key + "'");
      out_[key] = *def;
      return *def;
    }
    const auto& v = raw(key);
    if (!v.is_string()) fail_at(key, "'" + key + "' must be a string");
    out_[key] = v.get<std::string>();
    return v.get<std::string>();
  }

  std::string choice(const std::string& key, const std::vector<std::string>& options,
                     std::optional<std::string> def = std::nullopt) {
    const std::string v = string(key, def);
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
      fail_at(key, "'" + key + "' must be one of {" + all + "}, got '" + v + "'");
    }
    return v;
  }

  /// Runs fn on the sub-object (an empty one when absent and optional),
  /// checks it for unknown keys and records its resolved form.
  template <class Fn>
  auto object(const std::string& key, Fn&& fn, bool required = false) {
    static const json empty = json::object();
    if (!has(key) && required) fail("missing required key '" + key + "'");
    Obj sub(doc_, has(key) ? raw(key) : empty, child(key));
    return finish_child(key, sub, fn);
  }

  /// Runs fn(sub, index) on every element of an array of objects.
  template <class Fn>
  void objects(const std::string& key, Fn&& fn, bool required = true) {
    const json& arr = array(key, required);
    json list = json::array();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Obj sub(doc_, arr[k], child(key) + "/" + std::to_string(k));
      fn(sub, k);
      sub.finish();
      list.push_back(sub.out_);
    }
    out_[key] = std::move(list);
  }

  const json& array(const std::string& key, bool required = true) {
    static const json empty = json::array();
    if (!has(key)) {
      if (required) fail("missing required key '" + key + "'");
      return empty;
    }
    const auto& v = raw(key);
    if (!v.is_array()) fail_at(key, "'" + key + "' must be an array");
    out_[key] = v;
    return v;
  }

  /// Rethrows a ParseError from an expression string at its source location.
  template <class Fn>
  auto expression(const std::string& pointer, const std::string& src, Fn&& fn) const {
    try {
      return fn(src);
    } catch (const ParseError& e) {
      // +1 skips the opening quote
      throw ConfigError(doc_.where(pointer, e.position() + 1) + ": in \"" + src + "\": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(doc_.where(pointer) + ": in \"" + src + "\": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail_at(it.key(), "unknown key '" + it.key() + "'");
  }

 private:
  template <class Fn>
  auto finish_child(const std::string& key, Obj& sub, Fn& fn) {
    if constexpr (std::is_void_v<decltype(fn(sub))>) {
      fn(sub);
      sub.finish();
      out_[key] = sub.out_;
    } else {
      auto result = fn(sub);
      sub.finish();
      out_[key] = sub.out_;
      return result;
    }
  }

  const Document& doc_;
  const json& j_;
  std::string ptr_;
  json out_ = json::object();
  std::set<std::string> seen_;
};

}  // namespace nevlab::cli
