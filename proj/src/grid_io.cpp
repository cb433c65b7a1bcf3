#include "rlab/grid_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "rlab/errors.hpp"

namespace rlab::factor {

namespace {

struct AxisSpec {
  std::size_t n = 0;
  double lo = 0.0, hi = 0.0;
  bool seen = false;
};

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ValidationError("grid line " + std::to_string(line_no) + ": " + what);
}

template <typename T>
T parse_field(std::istringstream& s, std::size_t line_no, const char* name) {
  T v{};
  if (!(s >> v)) fail(line_no, std::string("expected ") + name);
  return v;
}

void expect_end(std::istringstream& s, std::size_t line_no) {
  std::string extra;
  if (s >> extra) fail(line_no, "unexpected trailing token '" + extra + "'");
}

template <typename Scalar>
void write_impl(std::ostream& out, const GriddedFunction<Scalar>& g, const char* kind) {
  out << std::setprecision(17);
  out << "ndims " << g.ndims() << '\n';
  for (std::size_t k = 0; k < g.ndims(); ++k) {
    const auto& a = g.axis(k);
    out << "axis " << k << ' ' << a.size() << ' ' << a.nodes.front() << ' ' << a.nodes.back()
        << '\n';
  }
  out << "kind " << kind << "\nvalues\n";
  const std::size_t row = g.extent(g.ndims() - 1);
  std::size_t col = 0;
  for (const auto& v : g.values()) {
    if constexpr (std::is_same_v<Scalar, double>) {
      out << v;
    } else {
      out << v.real() << ' ' << v.imag();
    }
    out << (++col % row == 0 ? '\n' : ' ');
  }
}

}  // namespace

AnyGrid read_grid(std::istream& in) {
  std::optional<std::size_t> ndims;
  std::vector<AxisSpec> axes;
  std::optional<bool> complex;
  std::string line;
  std::size_t line_no = 0;
  bool in_values = false;

  while (!in_values && std::getline(in, line)) {
    ++line_no;
    std::istringstream s(strip_comment(line));
    std::string key;
    if (!(s >> key)) continue;
    if (key == "ndims") {
      if (ndims) fail(line_no, "duplicate ndims");
      const auto n = parse_field<long long>(s, line_no, "dimension count");
      if (n != 2 && n != 3) fail(line_no, "ndims must be 2 or 3");
      ndims = static_cast<std::size_t>(n);
      axes.resize(*ndims);
    } else if (key == "axis") {
      if (!ndims) fail(line_no, "axis before ndims");
      const auto k = parse_field<long long>(s, line_no, "axis index");
      if (k < 0 || static_cast<std::size_t>(k) >= *ndims) fail(line_no, "axis index out of range");
      auto& a = axes[static_cast<std::size_t>(k)];
      if (a.seen) fail(line_no, "duplicate axis");
      const auto n = parse_field<long long>(s, line_no, "node count");
      if (n < 2) fail(line_no, "an axis needs at least two nodes");
      a.n = static_cast<std::size_t>(n);
      a.lo = parse_field<double>(s, line_no, "lower bound");
      a.hi = parse_field<double>(s, line_no, "upper bound");
      if (!(a.hi > a.lo)) fail(line_no, "axis range must be increasing");
      a.seen = true;
    } else if (key == "kind") {
      const auto kind = parse_field<std::string>(s, line_no, "kind");
      if (kind != "real" && kind != "complex") fail(line_no, "kind must be real or complex");
      complex = kind == "complex";
    } else if (key == "values") {
      in_values = true;
    } else {
      fail(line_no, "unknown directive '" + key + "'");
    }
    expect_end(s, line_no);
  }

  if (!ndims) throw ValidationError("grid header is missing ndims");
  for (std::size_t k = 0; k < axes.size(); ++k) {
    if (!axes[k].seen) throw ValidationError("grid header is missing axis " + std::to_string(k));
  }
  if (!in_values) throw ValidationError("grid file has no values section");
  const bool is_complex = complex.value_or(false);

  std::size_t total = 1;
  std::vector<Axis> grid_axes;
  for (const auto& a : axes) {
    total *= a.n;
    grid_axes.push_back(Axis::trapezoid(a.lo, a.hi, a.n));
  }

  std::vector<double> raw;
  raw.reserve(total * (is_complex ? 2 : 1));
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream s(strip_comment(line));
    std::string token;
    while (s >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        fail(line_no, "invalid number '" + token + "'");
      }
      if (used != token.size()) fail(line_no, "invalid number '" + token + "'");
      raw.push_back(v);
    }
  }
  const std::size_t expected = total * (is_complex ? 2 : 1);
  if (raw.size() != expected) {
    throw ValidationError("grid has " + std::to_string(raw.size()) + " numbers, expected " +
                          std::to_string(expected));
  }
  if (!is_complex) return RealGrid(std::move(grid_axes), std::move(raw));
  std::vector<std::complex<double>> v(total);
  for (std::size_t i = 0; i < total; ++i) v[i] = {raw[2 * i], raw[2 * i + 1]};
  return ComplexGrid(std::move(grid_axes), std::move(v));
}

AnyGrid read_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid file '" + path + "'");
  return read_grid(in);
}

void write_grid(std::ostream& out, const RealGrid& grid) { write_impl(out, grid, "real"); }
void write_grid(std::ostream& out, const ComplexGrid& grid) { write_impl(out, grid, "complex"); }

}  // namespace rlab::factor
