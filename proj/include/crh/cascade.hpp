#pragma once

#include <string>
#include <vector>

#include <crh/perturbation.hpp>
#include <crh/splitting.hpp>

namespace crh {

class BoundaryGrid;

// Dense row-major matrix with holomorphic polynomial entries (entries must
// stay free of zbar and wbar; the coupling constructions guarantee this).
struct PolyMatrix {
    unsigned rows = 0;
    unsigned cols = 0;
    std::vector<BigradedPoly> entries;

    PolyMatrix() = default;
    PolyMatrix(unsigned r, unsigned c) : rows(r), cols(c), entries(std::size_t(r) * c) {}

    BigradedPoly& at(unsigned i, unsigned j) { return entries[std::size_t(i) * cols + j]; }
    const BigradedPoly& at(unsigned i, unsigned j) const {
        return entries[std::size_t(i) * cols + j];
    }

    // Max over sampled |z| = |w| = radius of the pointwise spectral norm.
    // Entries are holomorphic, so the torus carries the polydisc sup.
    double sup_norm(double radius, unsigned phases = 24) const;

    // Number of offsets j - i holding a nonzero entry.
    unsigned diagonal_count() const;
};

// Coupling matrix of the degree-(n + k) mixed antiholomorphic monomials in
// the product of -phi_n with the k + 1 antiholomorphic monomials of degree
// k. Shape (k+1) x (n+k-1); at most n + 1 nonzero diagonals.
PolyMatrix build_B(unsigned k, unsigned n, const PerturbationSpec& pert);

struct CertificationCheck {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    double margin = 0.0;  // positive slack means the check passed
    bool pass = false;
};

struct CertificationReport {
    std::vector<CertificationCheck> checks;
    bool all_pass = true;

    const CertificationCheck* find(const std::string& name) const;
    std::string first_failure() const;
};

// Numerical checks backing the truncated-series decomposition: lower bound
// on the tridiagonal singular values, sup-norm bounds on every coupling
// matrix up to degree n_max, smallness of the low-order series parts on the
// declared polydisc, and boundary containment in the declared ball.
// Failed checks are reported, never thrown.
CertificationReport certify_perturbation(const PerturbationSpec& pert, unsigned n_max);

// Exact on-boundary rewrite rule for the mixed antiholomorphic monomials of
// one degree: component j equals zbar^{degree-1-j} wbar^{1+j} on the zero
// set of the defining series. Components mix lower, equal-holomorphic and
// higher antiholomorphic degrees; only the given degree is eliminated.
std::vector<BigradedPoly> cascade_relations(const PerturbationSpec& pert, unsigned degree);

struct CascadeRound {
    double tail_bound = 0.0;    // certified sup bound on the unresolved part
    double residual_sup = 0.0;  // measured |P - Q - R| sup on the grid
};

struct PerturbedDecomposition {
    DecompositionResult result;
    double tail_bound = 0.0;
    std::vector<CascadeRound> rounds;
    double max_inverse_norm = 0.0;    // sup of the eliminated-system inverse norms
    double max_coupling_ratio = 0.0;  // sup of coupling norm / certified cap
};

struct CascadeOptions {
    unsigned degree_guard = 64;        // hard cap on antiholomorphic degree growth
    const BoundaryGrid* grid = nullptr;  // residual grid; built on demand if null
    unsigned grid_n_base = 64;
    unsigned grid_n_angle = 64;
};

// Truncated splitting on a perturbed domain. Each round pushes the minimal
// unresolved mixed degree up by one; the running substitution matrices are
// tracked numerically on the declared polydisc and their certified norm
// inequalities are enforced at every stage.
PerturbedDecomposition decompose_perturbed(const BigradedPoly& P, const PerturbationSpec& pert,
                                           unsigned l_max, const CascadeOptions& opt = {});

}  // namespace crh
