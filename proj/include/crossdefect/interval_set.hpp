#pragma once

#include <string>
#include <vector>

namespace crossdefect {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double length() const { return hi - lo; }
  [[nodiscard]] bool contains(double x, double tol = 0.0) const {
    return x >= lo - tol && x <= hi + tol;
  }
};

/// Finite union of closed real intervals, kept sorted and disjoint.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> intervals, double join_gap = 0.0);

  [[nodiscard]] const std::vector<Interval>& intervals() const { return intervals_; }
  [[nodiscard]] bool empty() const { return intervals_.empty(); }
  [[nodiscard]] std::size_t size() const { return intervals_.size(); }
  [[nodiscard]] const Interval& operator[](std::size_t i) const { return intervals_[i]; }

  void add(Interval interval, double join_gap = 0.0);
  [[nodiscard]] bool contains(double x, double tol = 0.0) const;
  /// Distance from x to the set; zero inside, infinity for the empty set.
  [[nodiscard]] double distance(double x) const;

  /// Complement inside [lo, hi] after widening every interval by `margin`.
  [[nodiscard]] IntervalSet complement_within(double lo, double hi, double margin) const;

  [[nodiscard]] std::string to_string() const;

  friend IntervalSet set_union(const IntervalSet& a, const IntervalSet& b);
  friend bool operator==(const IntervalSet& a, const IntervalSet& b);

 private:
  void normalise(double join_gap);

  std::vector<Interval> intervals_;
};

}  // namespace crossdefect
