#include "perfopt/partition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace perfopt {

BoxDomain::BoxDomain(Point lower, Point upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw std::invalid_argument("BoxDomain: bounds must be nonempty and of equal size");
  }
  mid_.resize(lower_.size());
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!(lower_[k] < upper_[k])) {
      throw std::invalid_argument("BoxDomain: lower must be < upper on every axis");
    }
    mid_[k] = 0.5 * (lower_[k] + upper_[k]);
  }
}

BoxDomain BoxDomain::cube(std::size_t dim, double lo, double hi) {
  return BoxDomain(Point(dim, lo), Point(dim, hi));
}

double BoxDomain::diagonal() const {
  double s = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) s += width(k) * width(k);
  return std::sqrt(s);
}

Point BoxDomain::from_unit(std::span<const double> u) const {
  Point x(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    // Corners map exactly.
    if (u[k] == 0.0) {
      x[k] = lower_[k];
    } else if (u[k] == 1.0) {
      x[k] = upper_[k];
    } else {
      x[k] = lower_[k] + u[k] * width(k);
    }
  }
  return x;
}

Point BoxDomain::to_unit(std::span<const double> x) const {
  Point u(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    if (x[k] == lower_[k]) {
      u[k] = 0.0;
    } else if (x[k] == upper_[k]) {
      u[k] = 1.0;
    } else {
      u[k] = (x[k] - lower_[k]) / width(k);
    }
  }
  return u;
}

Point BoxDomain::from_offset(std::span<const double> s) const {
  Point x(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    if (s[k] == -0.5) {
      x[k] = lower_[k];
    } else if (s[k] == 0.5) {
      x[k] = upper_[k];
    } else {
      x[k] = mid_[k] + s[k] * width(k);
    }
  }
  return x;
}

bool BoxDomain::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k) {
    if (!(x[k] >= lower_[k] && x[k] <= upper_[k])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Cell::Cell(std::size_t dim, std::size_t depth, std::vector<std::uint8_t> bits)
    : dim_(dim), depth_(depth), bits_(std::move(bits)) {}

Cell Cell::root(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("Cell::root: dim must be positive");
  return Cell(dim, 0, {});
}

std::span<const std::uint8_t> Cell::axis_bits(std::size_t axis) const {
  return std::span<const std::uint8_t>(bits_).subspan(axis * depth_, depth_);
}

std::vector<Cell> Cell::children() const {
  const std::size_t count = std::size_t{1} << dim_;
  const std::size_t h = depth_ + 1;
  std::vector<Cell> out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    std::vector<std::uint8_t> bits(dim_ * h);
    for (std::size_t k = 0; k < dim_; ++k) {
      auto src = axis_bits(k);
      std::copy(src.begin(), src.end(), bits.begin() + k * h);
      bits[k * h + depth_] = static_cast<std::uint8_t>((j >> (dim_ - 1 - k)) & 1U);
    }
    out.push_back(Cell(dim_, h, std::move(bits)));
  }
  return out;
}

Cell Cell::parent() const {
  if (depth_ == 0) throw std::logic_error("Cell::parent: root has no parent");
  const std::size_t h = depth_ - 1;
  std::vector<std::uint8_t> bits(dim_ * h);
  for (std::size_t k = 0; k < dim_; ++k) {
    auto src = axis_bits(k);
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(h),
              bits.begin() + k * h);
  }
  return Cell(dim_, h, std::move(bits));
}

double Cell::edge() const { return std::ldexp(1.0, -static_cast<int>(depth_)); }

double Cell::diameter() const { return std::sqrt(static_cast<double>(dim_)) * edge(); }

double Cell::lower_offset(std::size_t axis) const {
  if (depth_ == 0) return -0.5;
  auto b = axis_bits(axis);
  // Accumulate from the least significant bit for accuracy.
  double acc = 0.0;
  if (b[0] == 1) {
    for (std::size_t j = depth_; j-- > 1;) {
      if (b[j]) acc += std::ldexp(1.0, -static_cast<int>(j + 1));
    }
    return acc;
  }
  acc = std::ldexp(1.0, -static_cast<int>(depth_));
  for (std::size_t j = depth_; j-- > 1;) {
    if (!b[j]) acc += std::ldexp(1.0, -static_cast<int>(j + 1));
  }
  return -acc;
}

double Cell::lower(std::size_t axis) const { return 0.5 + lower_offset(axis); }

double Cell::upper(std::size_t axis) const { return lower(axis) + edge(); }

Point Cell::center_offset() const {
  Point c(dim_);
  const double half = 0.5 * edge();
  for (std::size_t k = 0; k < dim_; ++k) c[k] = lower_offset(k) + half;
  return c;
}

Point Cell::center() const {
  Point c = center_offset();
  for (double& v : c) v += 0.5;
  return c;
}

bool Cell::contains_unit(std::span<const double> u) const {
  if (u.size() != dim_) return false;
  for (std::size_t k = 0; k < dim_; ++k) {
    if (!(u[k] >= lower(k) && u[k] <= upper(k))) return false;
  }
  return true;
}

std::string Cell::index_string() const {
  // Binary -> decimal with base-1e9 limbs, least significant limb first.
  constexpr std::uint32_t kBase = 1000000000U;
  std::vector<std::uint32_t> limbs{0};
  for (std::uint8_t bit : bits_) {
    std::uint64_t carry = bit;
    for (auto& limb : limbs) {
      const std::uint64_t v = std::uint64_t{limb} * 2 + carry;
      limb = static_cast<std::uint32_t>(v % kBase);
      carry = v / kBase;
    }
    if (carry) limbs.push_back(static_cast<std::uint32_t>(carry));
  }
  std::string out = std::to_string(limbs.back());
  for (std::size_t i = limbs.size() - 1; i-- > 0;) {
    std::string part = std::to_string(limbs[i]);
    out.append(9 - part.size(), '0');
    out += part;
  }
  return out;
}

std::uint64_t Cell::index() const {
  if (bits_.size() > 64) throw std::overflow_error("Cell::index: index exceeds 64 bits");
  std::uint64_t v = 0;
  for (std::uint8_t bit : bits_) v = (v << 1) | bit;
  return v;
}

std::strong_ordering operator<=>(const Cell& a, const Cell& b) {
  if (auto c = a.depth_ <=> b.depth_; c != 0) return c;
  if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
  return std::lexicographical_compare_three_way(a.bits_.begin(), a.bits_.end(),
                                                b.bits_.begin(), b.bits_.end());
}

Cell locate(std::span<const double> u, std::size_t depth) {
  // Exact binary expansion of each coordinate; u_k = 1 expands to all ones.
  std::vector<double> rest(u.begin(), u.end());
  Cell c = Cell::root(u.size());
  for (std::size_t h = 0; h < depth; ++h) {
    std::size_t j = 0;
    for (double& x : rest) {
      x *= 2.0;
      const bool hi = x >= 1.0;
      if (hi && x < 2.0) x -= 1.0;
      if (x >= 2.0) x = 1.0;
      j = (j << 1) | (hi ? 1U : 0U);
    }
    c = c.children()[j];
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::uint32_t, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                   23, 29, 31, 37, 41, 43, 47, 53};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double radical_inverse(std::uint64_t i, std::uint32_t base) {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += static_cast<double>(i % base) * f;
    i /= base;
    f *= inv;
  }
  return r;
}

std::uint64_t cell_hash(const Cell& cell, std::uint64_t salt) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(cell.dim());
  mix(cell.depth());
  for (std::size_t k = 0; k < cell.dim(); ++k) {
    for (std::uint8_t bit : cell.axis_bits(k)) mix(bit);
  }
  mix(salt);
  return splitmix64(h);
}

}  // namespace

std::vector<Point> candidate_offsets(const Cell& cell, std::size_t k,
                                     std::uint64_t salt) {
  if (k == 0) throw std::invalid_argument("candidate_points: k must be >= 1");
  const std::size_t dim = cell.dim();
  if (dim > kPrimes.size()) {
    throw std::invalid_argument("candidate_points: dimension above 16 is not supported");
  }
  std::vector<Point> out;
  out.reserve(k);
  out.push_back(cell.center_offset());
  if (k == 1) return out;

  Point lo(dim);
  Point shift(dim);
  const std::uint64_t seed = cell_hash(cell, salt);
  for (std::size_t a = 0; a < dim; ++a) {
    lo[a] = cell.lower_offset(a);
    shift[a] = static_cast<double>(splitmix64(seed + a) >> 11) * 0x1.0p-53;
  }
  const double edge = cell.edge();
  for (std::size_t i = 1; i < k; ++i) {
    Point p(dim);
    for (std::size_t a = 0; a < dim; ++a) {
      double t = radical_inverse(i, kPrimes[a]) + shift[a];
      t -= std::floor(t);
      // Snap to the midpoint of a 2^-32 bin: keeps t in the open interval.
      t = (std::floor(t * 0x1.0p32) + 0.5) * 0x1.0p-32;
      p[a] = lo[a] + edge * t;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Point> candidate_points(const Cell& cell, std::size_t k,
                                    std::uint64_t salt) {
  auto pts = candidate_offsets(cell, k, salt);
  for (auto& p : pts) {
    for (double& v : p) v += 0.5;
  }
  return pts;
}

}  // namespace perfopt
