#include "rivex/events.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "rivex/errors.hpp"

namespace rivex {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void DailyPanel::check() const {
  const auto n = static_cast<std::size_t>(values.rows());
  if (dates.size() != n || block.size() != n) throw InputError("panel: dates, blocks and values disagree in length");
  if (station_ids.size() != static_cast<std::size_t>(values.cols())) {
    throw InputError("panel: station id count does not match the value columns");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(dates[i - 1] < dates[i])) throw InputError("panel: dates must be strictly increasing (at " + dates[i] + ")");
  }
  std::set<int> closed;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && block[i] != block[i - 1]) {
      closed.insert(block[i - 1]);
      if (closed.count(block[i])) throw InputError("panel: block " + std::to_string(block[i]) + " is not contiguous");
    }
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    bool any = false;
    for (Eigen::Index i = 0; i < values.rows() && !any; ++i) any = std::isfinite(values(i, j));
    if (!any) throw InputError("panel: station " + station_ids[static_cast<std::size_t>(j)] + " has no data");
  }
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size(), kNaN);
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

EventMatrix decluster(const DailyPanel& panel, const DeclusterOptions& opt) {
  panel.check();
  const int p = opt.window;
  if (p < 1) throw InputError("decluster: window length must be at least 1");
  const int n = panel.days();
  const int m = panel.stations();

  // Score of a day: its largest normalized rank r/(N_j + 1) over stations.
  std::vector<double> score(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
  for (int j = 0; j < m; ++j) {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = panel.values(i, j);
    const std::vector<double> r = average_ranks(col);
    double count = 0.0;
    for (double v : r) count += std::isfinite(v) ? 1.0 : 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = r[static_cast<std::size_t>(i)];
      if (std::isfinite(v)) score[static_cast<std::size_t>(i)] = std::max(score[static_cast<std::size_t>(i)], v / (count + 1.0));
    }
  }

  std::vector<char> removed(static_cast<std::size_t>(n), 0);
  std::mt19937_64 rng(opt.seed);
  EventMatrix ev;
  ev.station_ids = panel.station_ids;
  std::vector<std::vector<double>> rows;

  for (;;) {
    // Days inside runs of at least p remaining days within one block.
    std::vector<char> eligible(static_cast<std::size_t>(n), 0);
    bool any = false;
    int i = 0;
    while (i < n) {
      if (removed[static_cast<std::size_t>(i)]) {
        ++i;
        continue;
      }
      int j = i;
      while (j + 1 < n && !removed[static_cast<std::size_t>(j + 1)] && panel.block[static_cast<std::size_t>(j + 1)] == panel.block[static_cast<std::size_t>(i)]) ++j;
      if (j - i + 1 >= p) {
        for (int k = i; k <= j; ++k) eligible[static_cast<std::size_t>(k)] = 1;
        any = true;
      }
      i = j + 1;
    }
    if (!any) break;

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> ties;
    for (int d = 0; d < n; ++d) {
      if (!eligible[static_cast<std::size_t>(d)]) continue;
      const double s = score[static_cast<std::size_t>(d)];
      if (s > best) {
        best = s;
        ties.assign(1, d);
      } else if (s == best) {
        ties.push_back(d);
      }
    }
    int c = ties.front();
    if (ties.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
      c = ties[pick(rng)];
    }
    const int blk = panel.block[static_cast<std::size_t>(c)];
    int lo = c - (p - 1) / 2;
    int hi = c + p / 2;
    // Clip at the block edge and at days already used by earlier windows.
    int a = c;
    while (a - 1 >= lo && a - 1 >= 0 && !removed[static_cast<std::size_t>(a - 1)] && panel.block[static_cast<std::size_t>(a - 1)] == blk) --a;
    int b = c;
    while (b + 1 <= hi && b + 1 < n && !removed[static_cast<std::size_t>(b + 1)] && panel.block[static_cast<std::size_t>(b + 1)] == blk) ++b;
    lo = a;
    hi = b;

    std::vector<double> row(static_cast<std::size_t>(m), kNaN);
    for (int d = lo; d <= hi; ++d) {
      removed[static_cast<std::size_t>(d)] = 1;
      for (int j = 0; j < m; ++j) {
        const double v = panel.values(d, j);
        if (std::isfinite(v) && !(v <= row[static_cast<std::size_t>(j)])) row[static_cast<std::size_t>(j)] = v;
      }
    }
    rows.push_back(std::move(row));
    ev.windows.push_back({blk, lo, hi - lo + 1, c});
    ev.start_dates.push_back(panel.dates[static_cast<std::size_t>(lo)]);
    ev.center_dates.push_back(panel.dates[static_cast<std::size_t>(c)]);
  }

  ev.raw.resize(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int j = 0; j < m; ++j) ev.raw(static_cast<Eigen::Index>(r), j) = rows[r][static_cast<std::size_t>(j)];
  }
  return ev;
}

Eigen::MatrixXd to_pareto(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    std::vector<double> col(static_cast<std::size_t>(raw.rows()));
    for (Eigen::Index i = 0; i < raw.rows(); ++i) col[static_cast<std::size_t>(i)] = raw(i, j);
    const std::vector<double> r = average_ranks(col);
    double count = 0.0;
    for (double v : r) count += std::isfinite(v) ? 1.0 : 0.0;
    if (count < 2.0) throw InputError("to_pareto: each station needs at least two events");
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const double v = r[static_cast<std::size_t>(i)];
      out(i, j) = std::isfinite(v) ? 1.0 / (1.0 - v / (count + 1.0)) : kNaN;
    }
  }
  return out;
}

void attach_pareto(EventMatrix& events) { events.pareto = to_pareto(events.raw); }

Eigen::MatrixXd block_maxima(const DailyPanel& panel) {
  panel.check();
  std::vector<int> labels;
  for (int b : panel.block) {
    if (labels.empty() || labels.back() != b) labels.push_back(b);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(labels.size()), panel.stations(), kNaN);
  Eigen::Index row = -1;
  for (int i = 0; i < panel.days(); ++i) {
    if (i == 0 || panel.block[static_cast<std::size_t>(i)] != panel.block[static_cast<std::size_t>(i - 1)]) ++row;
    for (int j = 0; j < panel.stations(); ++j) {
      const double v = panel.values(i, j);
      if (std::isfinite(v) && !(v <= out(row, j))) out(row, j) = v;
    }
  }
  return out;
}

double madogram_theta(std::span<const double> a, std::span<const double> b, int min_pairs) {
  if (a.size() != b.size()) throw InputError("madogram: series lengths differ");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) {
      x.push_back(a[i]);
      y.push_back(b[i]);
    }
  }
  if (static_cast<int>(x.size()) < min_pairs) {
    throw EstimationError("madogram: " + std::to_string(x.size()) + " complete pairs, need at least " +
                          std::to_string(min_pairs));
  }
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const auto k = static_cast<double>(x.size());
  double nu = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) nu += 0.5 * std::abs(rx[i] - ry[i]) / k;
  nu /= k;  // ranks / K are the empirical CDF values
  const double theta = (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu);
  return std::clamp(theta, 1.0, 2.0);
}

}  // namespace rivex
