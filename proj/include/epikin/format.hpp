#pragma once

#include <cstdio>
#include <string>

namespace epikin::detail {

// Fixed-point formatting with '.' decimal separator regardless of locale.
// All file outputs go through here so identical inputs give identical bytes.
inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    // snprintf honours the C locale of the process; keep output stable even
    // if someone set a comma locale.
    for (char& c : buf) {
        if (c == ',') c = '.';
        if (c == '\0') break;
    }
    return std::string(buf);
}

} // namespace epikin::detail
