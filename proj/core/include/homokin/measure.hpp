#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "homokin/linalg.hpp"

namespace homokin::measure {

// Weighted point cloud on phase space R^3_x x R^3_w.
struct EmpiricalMeasure {
  std::vector<PhasePoint> points;
  std::vector<double> weights;  // nonnegative, sum 1

  static EmpiricalMeasure uniform(std::vector<PhasePoint> pts);

  std::size_t size() const { return points.size(); }
  bool uniform_weights(double tol = 1e-12) const;
  // Throws UnsupportedMeasure on empty cloud / negative weights / sum != 1.
  void validate() const;
};

// Minimum-cost perfect matching on a dense n x n cost matrix (row-major),
// O(n^3) shortest augmenting paths. If `match` is non-null it receives the
// column assigned to each row. Exposed so tests can pit it against a
// brute-force permutation scan.
double assignment_min_cost(const std::vector<double>& cost, int n, std::vector<int>* match = nullptr);

// Exact Wasserstein-1 distance with Euclidean ground cost on R^6.
// Requires equal sizes, uniform weights, and n <= 2048 (assignment
// formulation); throws UnsupportedMeasure otherwise.
double w1_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Exact W1 between two weighted samples on the line (quantile coupling).
double w1_1d(std::vector<double> va, std::vector<double> wa,
             std::vector<double> vb, std::vector<double> wb);

// Sliced W1: average over seeded random directions u in S^5 of the 1D W1
// between the projections. Cheap surrogate; lower-bounds w1_exact up to a
// dimensional constant. Handles unequal sizes and non-uniform weights.
double w1_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                 int n_projections, std::uint64_t seed);

// CSV columns x1,x2,x3,w1,w2,w3[,weight]; the weight column is written only
// when weights are non-uniform and accepted either way on load.
void save_csv(const std::string& path, const EmpiricalMeasure& m);
EmpiricalMeasure load_csv(const std::string& path);

}  // namespace homokin::measure
