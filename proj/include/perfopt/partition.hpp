#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace perfopt {

using Point = std::vector<double>;

// Axis-aligned box Θ = Π [lower_k, upper_k]. Algorithms work on the unit cube
// and map points through this box; points are carried as offsets from the
// cube center (s = u - 1/2) so that deep cells near the middle of the domain
// keep full relative precision.
class BoxDomain {
 public:
  BoxDomain(Point lower, Point upper);

  // [lo, hi]^dim
  static BoxDomain cube(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lower_.size(); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  double width(std::size_t axis) const { return upper_[axis] - lower_[axis]; }
  // Euclidean length of the box diagonal.
  double diagonal() const;

  Point from_unit(std::span<const double> u) const;
  Point to_unit(std::span<const double> x) const;
  Point from_offset(std::span<const double> s) const;
  bool contains(std::span<const double> x) const;

 private:
  Point lower_;
  Point upper_;
  Point mid_;
};

// A node P_{h,i} of the dyadic partition of [0,1]^D: every axis is bisected
// at each level, so a depth-h cell has edge 2^-h and 2^D children.
//
// The cell is stored as D·h bits, axis-major: the h bits of axis 0 (most
// significant first), then axis 1, ... Read as one binary number this is the
// row-major index over per-axis coordinates, so comparing bit strings of
// equal depth compares indices, and depth is unbounded.
class Cell {
 public:
  static Cell root(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t depth() const { return depth_; }

  std::vector<Cell> children() const;
  Cell parent() const;

  // Coordinate of the cell along `axis` at its depth, as bits (MSB first).
  std::span<const std::uint8_t> axis_bits(std::size_t axis) const;

  double edge() const;      // 2^-h
  double diameter() const;  // sqrt(D) 2^-h

  // Unit-cube box.
  double lower(std::size_t axis) const;
  double upper(std::size_t axis) const;
  Point center() const;

  // Same box relative to the cube center; exact for any depth up to double
  // range, with relative precision near the middle.
  double lower_offset(std::size_t axis) const;
  Point center_offset() const;

  bool contains_unit(std::span<const double> u) const;

  // Row-major index as a decimal string (may exceed 64 bits).
  std::string index_string() const;
  // Row-major index; throws std::overflow_error if D·h > 64.
  std::uint64_t index() const;

  friend bool operator==(const Cell&, const Cell&) = default;
  // Orders by (depth, index).
  friend std::strong_ordering operator<=>(const Cell& a, const Cell& b);

 private:
  Cell(std::size_t dim, std::size_t depth, std::vector<std::uint8_t> bits);

  std::size_t dim_ = 0;
  std::size_t depth_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Cell at depth h containing unit point u (half-open cells; u_k = 1 maps to
// the last cell along k).
Cell locate(std::span<const double> u, std::size_t depth);

// Candidate decisions used to realize "argmin over the cell": the center,
// then k-1 Cranley-Patterson rotated Halton points strictly inside the cell.
// The rotation is hashed from (depth, index, salt) so the list is a pure
// function of those and k.
std::vector<Point> candidate_points(const Cell& cell, std::size_t k,
                                    std::uint64_t salt);
// Same points expressed as center offsets (see BoxDomain).
std::vector<Point> candidate_offsets(const Cell& cell, std::size_t k,
                                     std::uint64_t salt);

}  // namespace perfopt
