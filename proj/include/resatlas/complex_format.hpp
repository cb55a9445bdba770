#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

namespace resatlas {

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double x);

// "a+bi" form, shortest round-trip parts.
std::string format_complex(std::complex<double> z);

// Parses "a+bi" complex literals: "1.5", "-2i", "0.3-0.7i", "i", "1e-3+2.5e2i".
// Throws ParseError on malformed input.
std::complex<double> parse_complex(std::string_view text);

// Semicolon- (or sep-) separated list of complex literals.
std::vector<std::complex<double>> parse_complex_list(std::string_view text, char sep = ';');

}  // namespace resatlas
