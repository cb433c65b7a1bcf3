#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "rlab/factorization.hpp"

namespace rlab::factor {

/// Text grid format, one directive per line, '#' starts a comment:
///
///   ndims 2
///   axis 0 <nodes> <lo> <hi>
///   axis 1 <nodes> <lo> <hi>
///   kind real            (or: kind complex)
///   values
///   <row-major values, whitespace separated; complex as "re im" pairs>
///
/// Axes use trapezoidal weights on [lo, hi].
using AnyGrid = std::variant<RealGrid, ComplexGrid>;

AnyGrid read_grid(std::istream& in);
AnyGrid read_grid_file(const std::string& path);

void write_grid(std::ostream& out, const RealGrid& grid);
void write_grid(std::ostream& out, const ComplexGrid& grid);

}  // namespace rlab::factor
