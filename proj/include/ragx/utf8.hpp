#pragma once

#include <string>
#include <string_view>

// Spans throughout ragx count Unicode scalar values, not bytes. These helpers
// convert between the UTF-8 storage form and code-point sequences.
namespace ragx::utf8 {

std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);

std::size_t length(std::string_view text);

// Code-point slice [start, end) of a UTF-8 string.
std::string slice(std::string_view text, std::size_t start, std::size_t end);

bool is_space(char32_t c) noexcept;
bool is_ascii_punct(char32_t c) noexcept;

std::u32string trim(std::u32string_view text);
std::string trim(std::string_view text);

}  // namespace ragx::utf8
