#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "atomweaver/lattice.hpp"

namespace atomweaver {

struct Move {
  std::size_t source = 0;
  std::size_t destination = 0;
  double distance_m = 0.0;

  bool zero_distance() const { return source == destination; }
  friend bool operator==(const Move&, const Move&) = default;
};

/// Simultaneous transport of atoms. Sites in `kept_off` have their tone switched off
/// for the duration of the move; an atom sitting there is released.
struct MovePlan {
  std::vector<Move> moves;
  std::vector<std::size_t> kept_off;

  /// Moves that actually need a frequency sweep.
  std::size_t sweep_count() const {
    return static_cast<std::size_t>(
        std::count_if(moves.begin(), moves.end(), [](const Move& m) { return !m.zero_distance(); }));
  }

  bool has_motion() const { return sweep_count() > 0; }

  /// Distance travelled by the atom that ends up at each site (0 for static atoms).
  std::vector<double> distance_per_site(std::size_t sites) const {
    std::vector<double> d(sites, 0.0);
    for (const auto& m : moves) d.at(m.destination) = m.distance_m;
    return d;
  }
};

/// Target sites and the reservoir that feeds them. Both lists are kept sorted.
struct TargetSpec {
  std::vector<std::size_t> target;
  std::vector<std::size_t> reservoir;

  /// Target = [0, target_size), reservoir = [target_size, sites).
  static TargetSpec blocks(std::size_t target_size, std::size_t sites) {
    if (target_size > sites) throw std::invalid_argument("target larger than lattice");
    TargetSpec spec;
    for (std::size_t i = 0; i < target_size; ++i) spec.target.push_back(i);
    for (std::size_t i = target_size; i < sites; ++i) spec.reservoir.push_back(i);
    return spec;
  }

  void validate(std::size_t sites) const {
    std::vector<std::uint8_t> seen(sites, 0);
    for (const auto* list : {&target, &reservoir}) {
      for (auto s : *list) {
        if (s >= sites) throw std::invalid_argument("target spec site outside lattice");
        if (seen[s]) throw std::invalid_argument("target and reservoir sites must be disjoint");
        seen[s] = 1;
      }
    }
  }

  std::size_t defects(const Occupancy& occ) const {
    std::size_t n = 0;
    for (auto s : target) n += occ[s] ? 0 : 1;
    return n;
  }

  std::size_t reservoir_atoms(const Occupancy& occ) const {
    std::size_t n = 0;
    for (auto s : reservoir) n += occ[s] ? 1 : 0;
    return n;
  }
};

namespace detail {

inline std::vector<std::size_t> occupied_sites(const Occupancy& occ) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (occ[i]) out.push_back(i);
  return out;
}

inline double separation(std::size_t a, std::size_t b, double pitch_m) {
  return static_cast<double>(a > b ? a - b : b - a) * pitch_m;
}

inline std::vector<std::size_t> sorted_copy(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace detail

/// Executes a plan without loss. Throws std::logic_error when the plan is inconsistent
/// with the occupancy (moving an empty site, duplicate endpoints, or landing on a static atom).
inline Occupancy apply_plan(const Occupancy& occ, const MovePlan& plan) {
  Occupancy out = occ;
  std::vector<std::uint8_t> is_source(occ.size(), 0), is_dest(occ.size(), 0);
  for (const auto& m : plan.moves) {
    if (m.source >= occ.size() || m.destination >= occ.size())
      throw std::logic_error("move endpoint outside lattice");
    if (!occ[m.source]) throw std::logic_error("move source is empty");
    if (is_source[m.source]++) throw std::logic_error("duplicate move source");
    if (is_dest[m.destination]++) throw std::logic_error("duplicate move destination");
  }
  for (auto s : plan.kept_off) out.set(s, false);
  for (const auto& m : plan.moves) out.set(m.source, false);
  for (const auto& m : plan.moves) {
    if (out[m.destination]) throw std::logic_error("move lands on a static atom");
    out.set(m.destination, true);
  }
  return out;
}

/// Moves the k loaded traps, in order, onto sites 0..k-1. Empty traps are switched off.
inline MovePlan plan_compaction_1d(const Occupancy& occ, double pitch_m = kDefaultPitchM) {
  MovePlan plan;
  std::size_t next = 0;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (occ[i]) {
      plan.moves.push_back({i, next, detail::separation(i, next, pitch_m)});
      ++next;
    } else {
      plan.kept_off.push_back(i);
    }
  }
  return plan;
}

/// Fills target sites left to right, then reservoir sites, preserving atom order.
/// Atoms beyond target + reservoir capacity are released.
inline MovePlan plan_target_reservoir(const Occupancy& occ, const TargetSpec& spec,
                                      double pitch_m = kDefaultPitchM) {
  spec.validate(occ.size());
  std::vector<std::size_t> destinations = detail::sorted_copy(spec.target);
  const auto reservoir = detail::sorted_copy(spec.reservoir);
  destinations.insert(destinations.end(), reservoir.begin(), reservoir.end());

  MovePlan plan;
  const auto atoms = detail::occupied_sites(occ);
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (k < destinations.size())
      plan.moves.push_back({atoms[k], destinations[k], detail::separation(atoms[k], destinations[k], pitch_m)});
    else
      plan.kept_off.push_back(atoms[k]);
  }
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (!occ[i]) plan.kept_off.push_back(i);
  std::sort(plan.kept_off.begin(), plan.kept_off.end());
  return plan;
}

/// Fills each empty target site from the nearest reservoir atom. Ties go to the
/// reservoir atom closest to the target block, then to the lower index. With too few
/// reservoir atoms the leftmost defects are repaired first.
inline MovePlan plan_repair(const Occupancy& occ, const TargetSpec& spec,
                            double pitch_m = kDefaultPitchM) {
  spec.validate(occ.size());
  const auto target = detail::sorted_copy(spec.target);

  struct Candidate {
    std::size_t site;
    std::size_t to_block;
    bool used = false;
  };
  std::vector<Candidate> candidates;
  for (auto r : detail::sorted_copy(spec.reservoir)) {
    if (!occ[r]) continue;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (auto t : target) best = std::min(best, r > t ? r - t : t - r);
    candidates.push_back({r, best});
  }

  MovePlan plan;
  for (auto d : target) {
    if (occ[d]) continue;
    Candidate* pick = nullptr;
    std::size_t pick_dist = 0;
    for (auto& c : candidates) {
      if (c.used) continue;
      const std::size_t dist = c.site > d ? c.site - d : d - c.site;
      const bool better = pick == nullptr || dist < pick_dist ||
                          (dist == pick_dist && c.to_block < pick->to_block);
      if (better) {
        pick = &c;
        pick_dist = dist;
      }
    }
    if (pick == nullptr) break;
    pick->used = true;
    plan.moves.push_back({pick->site, d, static_cast<double>(pick_dist) * pitch_m});
  }
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (!occ[i]) plan.kept_off.push_back(i);
  return plan;
}

/// Rows and columns switched off so that every defect is covered.
struct RowColCover {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::size_t remaining_rows = 0;
  std::size_t remaining_cols = 0;

  std::size_t product() const { return remaining_rows * remaining_cols; }
};

namespace detail {

struct GridDefects {
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> r, c;
};

inline GridDefects grid_defects(const Occupancy& grid) {
  GridDefects d{grid.rows(), grid.cols(), {}, {}};
  for (std::size_t r = 0; r < grid.rows(); ++r)
    for (std::size_t c = 0; c < grid.cols(); ++c)
      if (!grid.at(r, c)) {
        d.r.push_back(r);
        d.c.push_back(c);
      }
  return d;
}

inline RowColCover make_cover(std::size_t rows, std::size_t cols, const std::vector<std::uint8_t>& row_off,
                              const std::vector<std::uint8_t>& col_off) {
  RowColCover cover;
  for (std::size_t r = 0; r < rows; ++r)
    if (row_off[r]) cover.rows.push_back(r);
  for (std::size_t c = 0; c < cols; ++c)
    if (col_off[c]) cover.cols.push_back(c);
  cover.remaining_rows = rows - cover.rows.size();
  cover.remaining_cols = cols - cover.cols.size();
  return cover;
}

}  // namespace detail

inline constexpr std::size_t kExactCoverMaxDefects = 20;

/// Optimal cover maximizing the surviving rectangle. Enumerates which defect-bearing
/// lines of the shorter side are deleted; the other side is then forced.
inline RowColCover exact_row_col_cover(const Occupancy& grid) {
  const auto d = detail::grid_defects(grid);
  if (d.r.size() > 62) throw std::invalid_argument("too many defects for exact cover");

  std::vector<std::size_t> defect_rows(d.r), defect_cols(d.c);
  for (auto* v : {&defect_rows, &defect_cols}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  const bool enumerate_rows = defect_rows.size() <= defect_cols.size();
  const auto& lines = enumerate_rows ? defect_rows : defect_cols;
  const std::size_t own_total = enumerate_rows ? d.rows : d.cols;
  const std::size_t other_total = enumerate_rows ? d.cols : d.rows;
  const auto& own = enumerate_rows ? d.r : d.c;
  const auto& other = enumerate_rows ? d.c : d.r;

  // Position of each defect's own-line in `lines`.
  std::vector<std::size_t> slot(own.size());
  for (std::size_t k = 0; k < own.size(); ++k)
    slot[k] = static_cast<std::size_t>(std::lower_bound(lines.begin(), lines.end(), own[k]) - lines.begin());

  std::vector<std::uint8_t> forced(other_total, 0);
  std::uint64_t best_mask = 0;
  std::size_t best_product = 0;
  bool have_best = false;
  const std::uint64_t limit = std::uint64_t{1} << lines.size();
  for (std::uint64_t mask = 0; mask < limit; ++mask) {
    std::fill(forced.begin(), forced.end(), 0);
    std::size_t forced_count = 0;
    for (std::size_t k = 0; k < own.size(); ++k) {
      if ((mask >> slot[k]) & 1u) continue;
      if (!forced[other[k]]) {
        forced[other[k]] = 1;
        ++forced_count;
      }
    }
    const auto deleted = static_cast<std::size_t>(std::popcount(mask));
    const std::size_t product = (own_total - deleted) * (other_total - forced_count);
    if (!have_best || product > best_product) {
      have_best = true;
      best_product = product;
      best_mask = mask;
    }
  }

  std::vector<std::uint8_t> own_off(own_total, 0), other_off(other_total, 0);
  for (std::size_t j = 0; j < lines.size(); ++j)
    if ((best_mask >> j) & 1u) own_off[lines[j]] = 1;
  for (std::size_t k = 0; k < own.size(); ++k)
    if (!own_off[own[k]]) other_off[other[k]] = 1;
  return enumerate_rows ? detail::make_cover(d.rows, d.cols, own_off, other_off)
                        : detail::make_cover(d.rows, d.cols, other_off, own_off);
}

/// Repeatedly deletes the line covering the most uncovered defects. Ties prefer the
/// larger surviving rectangle, then rows, then the lower index.
inline RowColCover greedy_row_col_cover(const Occupancy& grid) {
  auto d = detail::grid_defects(grid);
  std::vector<std::uint8_t> row_off(d.rows, 0), col_off(d.cols, 0);
  std::size_t rows_left = d.rows, cols_left = d.cols;
  std::vector<std::size_t> row_hits(d.rows), col_hits(d.cols);

  std::vector<std::size_t> open(d.r.size());
  for (std::size_t k = 0; k < open.size(); ++k) open[k] = k;

  while (!open.empty()) {
    std::fill(row_hits.begin(), row_hits.end(), 0);
    std::fill(col_hits.begin(), col_hits.end(), 0);
    for (auto k : open) {
      ++row_hits[d.r[k]];
      ++col_hits[d.c[k]];
    }
    bool pick_row = true;
    std::size_t pick = 0, pick_hits = 0, pick_product = 0;
    auto consider = [&](bool is_row, std::size_t idx, std::size_t hits) {
      if (hits == 0) return;
      const std::size_t product = is_row ? (rows_left - 1) * cols_left : rows_left * (cols_left - 1);
      if (hits > pick_hits || (hits == pick_hits && product > pick_product)) {
        pick_row = is_row;
        pick = idx;
        pick_hits = hits;
        pick_product = product;
      }
    };
    for (std::size_t r = 0; r < d.rows; ++r) consider(true, r, row_hits[r]);
    for (std::size_t c = 0; c < d.cols; ++c) consider(false, c, col_hits[c]);

    if (pick_row) {
      row_off[pick] = 1;
      --rows_left;
    } else {
      col_off[pick] = 1;
      --cols_left;
    }
    std::erase_if(open, [&](std::size_t k) { return row_off[d.r[k]] || col_off[d.c[k]]; });
  }
  return detail::make_cover(d.rows, d.cols, row_off, col_off);
}

enum class CoverMode { automatic, exact, greedy };

struct Method1Plan {
  RowColCover cover;
  MovePlan plan;       // flat row-major indices of the input grid
  std::size_t row_sweeps = 0;  // surviving row tones that move
  std::size_t col_sweeps = 0;
  bool exact = false;

  std::size_t sweep_sets() const { return (row_sweeps > 0 ? 1 : 0) + (col_sweeps > 0 ? 1 : 0); }
};

/// Row/column deletion followed by compaction of the surviving lines into the
/// top-left block. Exact when the grid has at most kExactCoverMaxDefects defects.
inline Method1Plan plan_method1_2d(const Occupancy& grid, double row_pitch_m = kDefaultPitchM,
                                   double col_pitch_m = kDefaultPitchM,
                                   CoverMode mode = CoverMode::automatic) {
  const std::size_t defects = grid.size() - grid.count();
  Method1Plan out;
  out.exact = mode == CoverMode::exact ||
              (mode == CoverMode::automatic && defects <= kExactCoverMaxDefects);
  out.cover = out.exact ? exact_row_col_cover(grid) : greedy_row_col_cover(grid);

  const std::size_t rows = grid.rows(), cols = grid.cols();
  constexpr auto off = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> row_rank(rows, off), col_rank(cols, off);
  std::vector<std::uint8_t> row_deleted(rows, 0), col_deleted(cols, 0);
  for (auto r : out.cover.rows) row_deleted[r] = 1;
  for (auto c : out.cover.cols) col_deleted[c] = 1;
  for (std::size_t r = 0, k = 0; r < rows; ++r)
    if (!row_deleted[r]) {
      row_rank[r] = k++;
      out.row_sweeps += (row_rank[r] != r);
    }
  for (std::size_t c = 0, k = 0; c < cols; ++c)
    if (!col_deleted[c]) {
      col_rank[c] = k++;
      out.col_sweeps += (col_rank[c] != c);
    }

  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t site = r * cols + c;
      if (row_rank[r] == off || col_rank[c] == off) {
        out.plan.kept_off.push_back(site);
        continue;
      }
      // Surviving lines are defect-free by construction.
      const double dr = static_cast<double>(r - row_rank[r]) * row_pitch_m;
      const double dc = static_cast<double>(c - col_rank[c]) * col_pitch_m;
      out.plan.moves.push_back({site, row_rank[r] * cols + col_rank[c], std::hypot(dr, dc)});
    }
  }
  return out;
}

/// Row-by-row transport into a left-justified block of `target_cols` columns.
/// Returns one plan per row, indexed by column within that row; surplus atoms of a row
/// are packed behind the target as that row's reservoir.
inline std::vector<MovePlan> plan_method2_2d(const Occupancy& grid, std::size_t target_cols,
                                             double col_pitch_m = kDefaultPitchM) {
  if (target_cols > grid.cols()) throw std::invalid_argument("target wider than grid");
  const auto spec = TargetSpec::blocks(target_cols, grid.cols());
  std::vector<MovePlan> plans;
  plans.reserve(grid.rows());
  for (std::size_t r = 0; r < grid.rows(); ++r)
    plans.push_back(plan_target_reservoir(grid.row(r), spec, col_pitch_m));
  return plans;
}

inline Occupancy apply_row_plans(const Occupancy& grid, const std::vector<MovePlan>& plans) {
  if (plans.size() != grid.rows()) throw std::invalid_argument("one plan per row required");
  Occupancy out = grid;
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    const Occupancy row = apply_plan(grid.row(r), plans[r]);
    for (std::size_t c = 0; c < grid.cols(); ++c) out.set(r, c, row[c]);
  }
  return out;
}

}  // namespace atomweaver
