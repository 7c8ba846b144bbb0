#include "crossdefect/interval_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace crossdefect {

IntervalSet::IntervalSet(std::vector<Interval> intervals, double join_gap)
    : intervals_(std::move(intervals)) {
  normalise(join_gap);
}

void IntervalSet::add(Interval interval, double join_gap) {
  intervals_.push_back(interval);
  normalise(join_gap);
}

void IntervalSet::normalise(double join_gap) {
  for (const Interval& i : intervals_) {
    if (!(i.lo <= i.hi)) throw std::invalid_argument("interval bounds are not ordered");
  }
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  std::vector<Interval> merged;
  for (const Interval& i : intervals_) {
    if (!merged.empty() && i.lo <= merged.back().hi + join_gap) {
      merged.back().hi = std::max(merged.back().hi, i.hi);
    } else {
      merged.push_back(i);
    }
  }
  intervals_ = std::move(merged);
}

bool IntervalSet::contains(double x, double tol) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [&](const Interval& i) { return i.contains(x, tol); });
}

double IntervalSet::distance(double x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const Interval& i : intervals_) {
    if (i.contains(x)) return 0.0;
    d = std::min({d, std::abs(x - i.lo), std::abs(x - i.hi)});
  }
  return d;
}

IntervalSet IntervalSet::complement_within(double lo, double hi, double margin) const {
  std::vector<Interval> out;
  double cursor = lo;
  for (const Interval& i : intervals_) {
    const double a = i.lo - margin;
    const double b = i.hi + margin;
    if (b < cursor) continue;
    if (a > cursor) out.push_back({cursor, std::min(a, hi)});
    cursor = std::max(cursor, b);
    if (cursor >= hi) break;
  }
  if (cursor < hi) out.push_back({cursor, hi});
  std::vector<Interval> kept;
  for (const Interval& i : out) {
    if (i.lo < i.hi) kept.push_back(i);
  }
  return IntervalSet(std::move(kept));
}

std::string IntervalSet::to_string() const {
  if (intervals_.empty()) return "{}";
  std::ostringstream os;
  os.precision(10);
  for (std::size_t k = 0; k < intervals_.size(); ++k) {
    if (k > 0) os << " U ";
    os << "[" << intervals_[k].lo << ", " << intervals_[k].hi << "]";
  }
  return os.str();
}

IntervalSet set_union(const IntervalSet& a, const IntervalSet& b) {
  std::vector<Interval> all = a.intervals_;
  all.insert(all.end(), b.intervals_.begin(), b.intervals_.end());
  return IntervalSet(std::move(all));
}

bool operator==(const IntervalSet& a, const IntervalSet& b) {
  if (a.intervals_.size() != b.intervals_.size()) return false;
  for (std::size_t k = 0; k < a.intervals_.size(); ++k) {
    if (a.intervals_[k].lo != b.intervals_[k].lo || a.intervals_[k].hi != b.intervals_[k].hi) {
      return false;
    }
  }
  return true;
}

}  // namespace crossdefect
