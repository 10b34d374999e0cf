#ifndef CATNET_NETWORK_HPP
#define CATNET_NETWORK_HPP

#include <set>
#include <span>
#include <string>
#include <vector>

#include "catnet/field.hpp"

namespace catnet {

// Directed catalyst graph with coefficient fields.  Edge (i, j) means
// coordinate i multiplies coordinate j's branching rate: coordinate j then
// diffuses as sqrt(2 gamma_j(x) x_i x_j).  Vertex indices are 0-based
// internally; the JSON surface is 1-based.
struct BranchingNetwork {
  int d = 0;
  std::vector<std::pair<int, int>> edges;  // (catalyst, reactant)
  std::vector<ScalarField> gamma;
  std::vector<ScalarField> b;

  // Derived structure (filled by finalize()).
  std::vector<int> catalyst_of;            // c_j, or -1 when j is not a reactant
  std::vector<std::vector<int>> reactants; // R_i per vertex
  std::vector<char> is_catalyst;           // i in C
  std::vector<char> is_reactant;           // j in R

  void finalize();  // recomputes the derived sets; throws only on size mismatch
};

struct Violation {
  std::string clause;   // which hypothesis clause failed
  std::string detail;   // offending edge / point
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

// Structural hypothesis: no self-loop, and every vertex is the second
// element of at most one edge.
ValidationReport validate_network(const BranchingNetwork& net);

// Coefficient hypothesis on a sample grid: gamma_i > 0, |b_i| <= c (1 + |x|)
// with fitted c, and b_i > 0 wherever x_i = 0.
ValidationReport check_coefficients(const BranchingNetwork& net,
                                    std::span<const std::vector<double>> grid);

// x lies in S iff prod over edges (i,j) of (x_i + x_j) > 0.
bool in_state_space(const BranchingNetwork& net, std::span<const double> x);

// Test function with optional analytic derivatives for generator evaluation.
struct TestFunctionView {
  std::function<double(std::span<const double>)> value;
  std::function<double(int, std::span<const double>)> partial;    // may be null
  std::function<double(int, std::span<const double>)> partial2;   // may be null
};

// A f(x) = sum_{j in R} gamma_j x_{c_j} x_j f_jj + sum_{j notin R} gamma_j x_j f_jj
//        + sum_j b_j f_j.  Missing derivatives are filled by central
// differences with step 1e-5 (1 + |x|).
double apply_generator(const BranchingNetwork& net, const TestFunctionView& f,
                       std::span<const double> x);

// Output of the localization at a base point x0 in S: index sets, frozen
// coefficients, the constant of the local model, and the reference-measure
// exponents.  Coordinates outside N1 are constrained to be >= 0.
struct LocalModel {
  std::vector<double> x0;
  std::set<int> zero_set;        // Z = {i : x0_i = 0}
  std::set<int> n1;              // catalyzed by a vanishing catalyst
  std::set<int> n2;              // complement of N1 and Z cap C
  std::vector<double> gamma0;    // frozen diffusion coefficients
  std::vector<double> b0;        // frozen drifts (delta/2 floor off N1)
  double m0 = 1.0;               // max(gamma0, 1/gamma0, |b0|) v max_{j notin N1} 1/b0
  std::vector<char> constrained; // true where the local state space demands x_j >= 0
  std::vector<double> mu_exponents;  // b0/gamma0 - 1 off N1, 0 (Lebesgue) on N1
  std::vector<int> catalyst_of;  // copied graph structure
  int d = 0;
};

LocalModel localize(const BranchingNetwork& net, std::span<const double> x0);

// Frozen diffusion coefficient gamma~_j(x): x_j gamma_j on N1, x_{c_j} gamma_j
// for reactants off N1, gamma_j otherwise.  Exposed for the simulator.
double effective_gamma(const BranchingNetwork& net, int j, std::span<const double> x,
                       const std::set<int>& n1);

struct OscillationReport {
  struct Entry {
    std::vector<double> point;
    double oscillation;  // max_i (sup - inf) of gamma_i over B(point, r)
    bool flagged;
  };
  std::vector<Entry> entries;
  double max_oscillation = 0.0;
  bool all_below_threshold = true;
};

// Scans max_i Osc_{B(x,r)} gamma_i over a box grid; the ball is probed by a
// deterministic low-discrepancy point set (256 points).
OscillationReport oscillation_scan(const BranchingNetwork& net,
                                   std::span<const double> box_lo,
                                   std::span<const double> box_hi, int grid_per_axis,
                                   double radius, double eps0, int ball_points = 256);

}  // namespace catnet

#endif  // CATNET_NETWORK_HPP
