#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace hlstm::utf8 {

// Replaces every ill-formed UTF-8 sequence with U+FFFD.
std::string sanitize(std::string_view bytes);

// Decodes the code point starting at `pos` of well-formed UTF-8 and
// returns it along with its byte length.
char32_t decode(std::string_view text, std::size_t pos, std::size_t* length);

bool is_space(char32_t cp);

}  // namespace hlstm::utf8
