#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rivex {

/// Daily discharges, N days by m stations; NaN marks a missing value. `block` labels the
/// season (e.g. one summer) each day belongs to; blocks are contiguous runs of days.
struct DailyPanel {
  std::vector<std::string> dates;
  std::vector<int> block;
  std::vector<std::string> station_ids;
  Eigen::MatrixXd values;

  int days() const { return static_cast<int>(values.rows()); }
  int stations() const { return static_cast<int>(values.cols()); }
  /// InputError on inconsistent sizes, non-increasing dates, split blocks or all-missing stations.
  void check() const;
};

struct EventWindow {
  int block = 0;
  int start = 0;   // first day index
  int length = 0;  // <= p; shorter when clipped
  int center = 0;  // the selected day
};

struct EventMatrix {
  std::vector<std::string> station_ids;
  std::vector<EventWindow> windows;
  std::vector<std::string> start_dates;
  std::vector<std::string> center_dates;
  Eigen::MatrixXd raw;     // n x m, NaN where the station has no data in the window
  Eigen::MatrixXd pareto;  // n x m standard-Pareto view, filled by to_pareto

  int size() const { return static_cast<int>(raw.rows()); }
};

struct DeclusterOptions {
  int window = 9;
  std::uint64_t seed = 1;  // tie-breaking
};

/// Rank-based extraction of nonoverlapping p-day windows (see README for the exact rules).
EventMatrix decluster(const DailyPanel& panel, const DeclusterOptions& opt = {});

/// Per column: 1/(1 - R/(n+1)) with R the average rank among the non-missing entries.
Eigen::MatrixXd to_pareto(const Eigen::MatrixXd& raw);

/// Fills events.pareto from events.raw.
void attach_pareto(EventMatrix& events);

/// Per-block maxima, blocks x stations (NaN when a block has no data for a station).
Eigen::MatrixXd block_maxima(const DailyPanel& panel);

/// F-madogram estimate of the pairwise extremal coefficient, clipped to [1, 2]. Pairs with a
/// missing member are dropped; EstimationError if fewer than `min_pairs` remain.
double madogram_theta(std::span<const double> a, std::span<const double> b, int min_pairs = 20);

/// Average ranks (1-based) of the finite entries; NaN entries stay NaN.
std::vector<double> average_ranks(std::span<const double> v);

}  // namespace rivex
