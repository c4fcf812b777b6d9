#include "smartnie/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace smartnie {

namespace {

    std::string special(double value)
    {
        if (std::isnan(value)) {
            return "nan";
        }
        return value > 0 ? "inf" : "-inf";
    }

} // namespace

std::string fixed(double value, int decimals)
{
    if (!std::isfinite(value)) {
        return special(value);
    }
    std::array<char, 400> buf {};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, decimals);
    return { buf.data(), res.ptr };
}

std::string shortest(double value)
{
    if (!std::isfinite(value)) {
        return special(value);
    }
    std::array<char, 64> buf {};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return { buf.data(), res.ptr };
}

} // namespace smartnie
