#pragma once

#include <string>

namespace qij {

/// Shortest round-trip decimal text for a double ("%.17g" class), locale
/// independent.
std::string format_double(double value);

}  // namespace qij
