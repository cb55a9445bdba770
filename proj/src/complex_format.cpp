#include "resatlas/complex_format.hpp"

#include <charconv>
#include <cmath>

#include "resatlas/errors.hpp"

namespace resatlas {

std::string format_double(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string format_complex(std::complex<double> z) {
    std::string out = format_double(z.real());
    if (z.imag() >= 0 || std::isnan(z.imag())) out += '+';
    out += format_double(z.imag());
    out += 'i';
    return out;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

double parse_full_double(std::string_view s, std::string_view whole) {
    // from_chars rejects a leading '+'
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("not a number in complex literal '" + std::string(whole) + "'");
    return value;
}

// A signed coefficient that may degenerate to bare "+", "-" or "" (meaning 1).
double parse_coefficient(std::string_view s, std::string_view whole) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return parse_full_double(s, whole);
}

}  // namespace

std::complex<double> parse_complex(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) throw ParseError("empty complex literal");

    if (s.back() != 'i' && s.back() != 'I') return {parse_full_double(s, text), 0.0};

    std::string_view body = s.substr(0, s.size() - 1);
    // Split at the last sign that is not a leading sign or an exponent sign.
    std::size_t split = std::string_view::npos;
    for (std::size_t p = body.size(); p-- > 1;) {
        if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
            split = p;
            break;
        }
    }
    if (split == std::string_view::npos) return {0.0, parse_coefficient(body, text)};
    return {parse_full_double(body.substr(0, split), text),
            parse_coefficient(body.substr(split), text)};
}

std::vector<std::complex<double>> parse_complex_list(std::string_view text, char sep) {
    std::vector<std::complex<double>> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(sep, start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view piece = trim(text.substr(start, end - start));
        if (!piece.empty()) out.push_back(parse_complex(piece));
        if (end == text.size()) break;
        start = end + 1;
    }
    if (out.empty()) throw ParseError("empty complex list");
    return out;
}

}  // namespace resatlas
