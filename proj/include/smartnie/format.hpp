#pragma once

#include <string>

namespace smartnie {

// Locale-independent number formatting.

/// Fixed notation with the given number of decimals.
std::string fixed(double value, int decimals);

/// Shortest text that parses back to the same double.
std::string shortest(double value);

} // namespace smartnie
