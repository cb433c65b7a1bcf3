#include <doctest.h>

#include <sstream>

#include "rlab/errors.hpp"
#include "rlab/grid_io.hpp"

using namespace rlab::factor;

TEST_CASE("reads a real grid with comments") {
  std::istringstream in(R"(# two by three
ndims 2
axis 0 2 0 1
axis 1 3 -1 1   # trailing comment
kind real
values
1 2 3
4 5 6
)");
  const auto g = read_grid(in);
  REQUIRE(std::holds_alternative<RealGrid>(g));
  const auto& r = std::get<RealGrid>(g);
  CHECK(r.extent(0) == 2);
  CHECK(r.extent(1) == 3);
  CHECK(r(1, 2) == 6.0);
  CHECK(r.axis(1).nodes[0] == -1.0);
}

TEST_CASE("complex grid round trip") {
  const auto psi = ComplexGrid::sample3(Axis::trapezoid(0, 1, 2), Axis::trapezoid(0, 2, 3),
                                        Axis::trapezoid(-1, 1, 2), [](double x, double y, double z) {
                                          return std::complex<double>(x + 0.1 * y, z - 1.0 / 3.0);
                                        });
  std::stringstream s;
  write_grid(s, psi);
  const auto back = read_grid(s);
  REQUIRE(std::holds_alternative<ComplexGrid>(back));
  const auto& c = std::get<ComplexGrid>(back);
  REQUIRE(c.values().size() == psi.values().size());
  for (std::size_t i = 0; i < c.values().size(); ++i) CHECK(c.values()[i] == psi.values()[i]);
}

TEST_CASE("malformed grids are rejected") {
  const char* bad[] = {
      "axis 0 2 0 1\n",                                            // axis before ndims
      "ndims 4\n",                                                 // unsupported rank
      "ndims 2\naxis 0 2 0 1\nkind real\nvalues\n1 2\n",           // missing axis 1
      "ndims 2\naxis 0 2 0 1\naxis 1 2 0 1\nkind real\nvalues\n1 2 3\n",  // too few values
      "ndims 2\naxis 0 2 0 1\naxis 1 2 0 1\nvalues\n1 2 3 x\n",    // bad number
      "ndims 2\naxis 0 2 1 0\naxis 1 2 0 1\nvalues\n1 2 3 4\n",    // decreasing range
      "ndims 2\naxis 0 2 0 1\naxis 1 2 0 1\nkind quaternion\n",    // bad kind
      "ndims 2\nshape 2 2\n",                                      // unknown directive
      "ndims 2\naxis 0 2 0 1\naxis 1 2 0 1\n",                     // no values section
  };
  for (const char* text : bad) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_grid(in), rlab::ValidationError);
  }
}
