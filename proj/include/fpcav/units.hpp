#pragma once

#include <string>
#include <string_view>

namespace fpcav {

enum class Dimension { Length, Frequency, Dimensionless };

// Parses "<number> <unit>" (space optional). Lengths accept m, mm, um, μm, nm, pm;
// frequencies Hz, kHz, MHz, GHz, THz. Returns SI. Throws InvalidConfigError on a
// missing or mismatched unit.
double parse_quantity(std::string_view text, Dimension dim);

double parse_number(std::string_view text);

std::string_view dimension_name(Dimension dim);

}  // namespace fpcav
