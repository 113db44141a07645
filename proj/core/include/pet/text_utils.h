// pet/text_utils.h

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pet {

// Lines without their terminators; a trailing '\r' is dropped.
std::vector<std::string_view> SplitLines(std::string_view text);
std::vector<std::string_view> Split(std::string_view text, char sep);
std::vector<std::string> SplitWhitespace(std::string_view text);
// One string per UTF-8 code point; whitespace code points are skipped.
std::vector<std::string> SplitUtf8Chars(std::string_view text);
std::string_view Trim(std::string_view text);

std::string ReadFile(const std::string &path);
void WriteFile(const std::string &path, std::string_view content);

}  // namespace pet
