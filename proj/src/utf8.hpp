#pragma once

#include <string>
#include <string_view>

namespace gatekeeper::utf8 {

// Decodes UTF-8, substituting U+FFFD for each malformed byte.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);

}  // namespace gatekeeper::utf8
