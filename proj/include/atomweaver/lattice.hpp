#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace atomweaver {

/// RF frequencies are integer Hz so that multi-tone loops are exactly periodic.
using Hz = std::int64_t;

inline constexpr Hz kDefaultFreqStartHz = 74'500'000;
inline constexpr Hz kDefaultFreqStepHz = 490'000;
inline constexpr std::size_t kDefaultSites = 100;
inline constexpr double kDefaultPitchM = 2.6e-6;

/// One axis of a trap array: a frequency comb mapped onto evenly spaced positions.
struct AxisComb {
  std::size_t sites = kDefaultSites;
  Hz freq_start_hz = kDefaultFreqStartHz;
  Hz freq_step_hz = kDefaultFreqStepHz;
  double pitch_m = kDefaultPitchM;

  void validate() const {
    if (sites < 1) throw std::invalid_argument("lattice axis needs at least one site");
    if (freq_step_hz <= 0) throw std::invalid_argument("freq_step_hz must be positive");
    if (!(pitch_m > 0.0) || !std::isfinite(pitch_m))
      throw std::invalid_argument("pitch_m must be positive");
  }

  Hz frequency(std::size_t i) const {
    if (i >= sites)
      throw std::out_of_range("site index " + std::to_string(i) + " outside [0, " +
                              std::to_string(sites) + ")");
    return freq_start_hz + static_cast<Hz>(i) * freq_step_hz;
  }

  double position(std::size_t i) const {
    if (i >= sites) throw std::out_of_range("site index out of range");
    return static_cast<double>(i) * pitch_m;
  }

  /// Closest site to an arbitrary frequency, clamped to the comb.
  std::size_t nearest_site(Hz freq_hz) const {
    const double k = std::round(static_cast<double>(freq_hz - freq_start_hz) /
                                static_cast<double>(freq_step_hz));
    if (k <= 0.0) return 0;
    if (k >= static_cast<double>(sites - 1)) return sites - 1;
    return static_cast<std::size_t>(k);
  }
};

/// Trap array geometry. A 1D array is a single row; a 2D array uses one comb per axis
/// (row tones select the row, column tones the column).
class TrapLattice {
 public:
  static TrapLattice line(AxisComb axis) {
    axis.validate();
    return TrapLattice(axis, std::nullopt);
  }

  static TrapLattice grid(AxisComb row_axis, AxisComb col_axis) {
    row_axis.validate();
    col_axis.validate();
    return TrapLattice(col_axis, row_axis);
  }

  bool is_2d() const { return row_axis_.has_value(); }
  std::size_t rows() const { return row_axis_ ? row_axis_->sites : 1; }
  std::size_t cols() const { return col_axis_.sites; }
  std::size_t size() const { return rows() * cols(); }

  const AxisComb& col_axis() const { return col_axis_; }
  const AxisComb& row_axis() const {
    if (!row_axis_) throw std::logic_error("1D lattice has no row axis");
    return *row_axis_;
  }

 private:
  TrapLattice(AxisComb col_axis, std::optional<AxisComb> row_axis)
      : col_axis_(col_axis), row_axis_(row_axis) {}

  AxisComb col_axis_;
  std::optional<AxisComb> row_axis_;
};

/// 100 tweezers, 74.5 MHz to 123.01 MHz in 0.49 MHz steps, 2.6 um apart.
inline TrapLattice default_lattice_1d() { return TrapLattice::line(AxisComb{}); }

inline Hz site_frequency(const TrapLattice& lattice, std::size_t i) {
  if (lattice.is_2d()) throw std::invalid_argument("site_frequency expects a 1D lattice");
  return lattice.col_axis().frequency(i);
}

inline double site_position(const TrapLattice& lattice, std::size_t i) {
  if (lattice.is_2d()) throw std::invalid_argument("site_position expects a 1D lattice");
  return lattice.col_axis().position(i);
}

/// Occupation state, one entry per site, row-major for 2D. Each site holds 0 or 1 atom.
class Occupancy {
 public:
  Occupancy() = default;
  explicit Occupancy(std::size_t sites) : rows_(1), cols_(sites), bits_(sites, 0) {}
  Occupancy(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  static Occupancy from_bits(const std::vector<int>& bits) {
    Occupancy occ(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) occ.set(i, bits[i] != 0);
    return occ;
  }

  static Occupancy from_grid(const std::vector<std::vector<int>>& grid) {
    const std::size_t rows = grid.size();
    const std::size_t cols = rows ? grid.front().size() : 0;
    Occupancy occ(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (grid[r].size() != cols) throw std::invalid_argument("ragged occupancy grid");
      for (std::size_t c = 0; c < cols; ++c) occ.set(r, c, grid[r][c] != 0);
    }
    return occ;
  }

  static Occupancy empty_like(const TrapLattice& lattice) {
    return Occupancy(lattice.rows(), lattice.cols());
  }

  std::size_t size() const { return bits_.size(); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  bool at(std::size_t i) const { return bits_.at(i) != 0; }
  bool at(std::size_t r, std::size_t c) const { return bits_.at(index(r, c)) != 0; }

  void set(std::size_t i, bool occupied) { bits_.at(i) = occupied ? 1 : 0; }
  void set(std::size_t r, std::size_t c, bool occupied) { set(index(r, c), occupied); }

  std::size_t index(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_) throw std::out_of_range("grid site out of range");
    return r * cols_ + c;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  /// Number of leading occupied sites (the defect-free length measured from site 0).
  std::size_t leading_run() const {
    std::size_t n = 0;
    while (n < bits_.size() && bits_[n]) ++n;
    return n;
  }

  bool all_occupied(const std::vector<std::size_t>& sites) const {
    for (auto s : sites)
      if (!at(s)) return false;
    return true;
  }

  Occupancy row(std::size_t r) const {
    Occupancy out(cols_);
    for (std::size_t c = 0; c < cols_; ++c) out.set(c, at(r, c));
    return out;
  }

  /// Sub-grid [0, rows) x [0, cols); used to track the active region of a 2D AOD.
  Occupancy block(std::size_t rows, std::size_t cols) const {
    Occupancy out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out.set(r, c, at(r, c));
    return out;
  }

  bool matches(const TrapLattice& lattice) const {
    return rows_ == lattice.rows() && cols_ == lattice.cols();
  }

  friend bool operator==(const Occupancy&, const Occupancy&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace atomweaver
