// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "hig/core/real.hpp"

namespace hig::io {

// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

// Round-trip text for a real value.
std::string format_real(double v);

// Moves `key` out of `kv` into `dst` when present. Integers reject signs,
// booleans accept true/false/1/0, trailing garbage is an error.
template <class T>
void take(KeyValues& kv, const std::string& key, T& dst) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string text = it->second;
  kv.erase(it);
  try {
    std::size_t used = 0;
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") dst = true;
      else if (text == "false" || text == "0") dst = false;
      else throw std::invalid_argument(text);
      used = text.size();
    } else if constexpr (std::is_integral_v<T>) {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
      dst = static_cast<T>(std::stoull(text, &used));
    } else {
      dst = static_cast<T>(std::stod(text, &used));
    }
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw Error("config key " + key + ": cannot parse '" + text + "'");
  }
}

}  // namespace hig::io
