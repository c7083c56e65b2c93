#pragma once

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace crh {

using cplx = std::complex<double>;

// Exponent tuple of z^a zbar^b w^c wbar^d.
struct Monomial4 {
    unsigned a = 0;  // z
    unsigned b = 0;  // zbar
    unsigned c = 0;  // w
    unsigned d = 0;  // wbar

    unsigned total_degree() const { return a + b + c + d; }
    unsigned holo_degree() const { return a + c; }
    unsigned antiholo_degree() const { return b + d; }
    bool is_mixed() const { return b >= 1 && d >= 1; }

    // Exponents of the complex-conjugate monomial.
    Monomial4 conj() const { return {b, a, d, c}; }

    friend auto operator<=>(const Monomial4&, const Monomial4&) = default;
};

// Polynomial in z, zbar, w, wbar with complex coefficients, stored sparsely.
// Terms with coefficient exactly zero are never kept.  Iteration order is
// lexicographic in (a, b, c, d), which makes sums and serialization
// deterministic.
class BigradedPoly {
  public:
    using TermMap = std::map<Monomial4, cplx>;

    BigradedPoly() = default;
    explicit BigradedPoly(cplx constant) {
        if (constant != 0.0) terms_[Monomial4{}] = constant;
    }

    static BigradedPoly monomial(Monomial4 m, cplx coeff = 1.0) {
        BigradedPoly p;
        if (coeff != 0.0) p.terms_[m] = coeff;
        return p;
    }

    const TermMap& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    cplx coefficient(Monomial4 m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? cplx(0.0) : it->second;
    }
    cplx coefficient(unsigned a, unsigned b, unsigned c, unsigned d) const {
        return coefficient(Monomial4{a, b, c, d});
    }

    void add_term(Monomial4 m, cplx coeff);

    BigradedPoly& operator+=(const BigradedPoly& rhs);
    BigradedPoly& operator-=(const BigradedPoly& rhs);
    BigradedPoly& operator*=(cplx s);
    friend BigradedPoly operator+(BigradedPoly lhs, const BigradedPoly& rhs) {
        lhs += rhs;
        return lhs;
    }
    friend BigradedPoly operator-(BigradedPoly lhs, const BigradedPoly& rhs) {
        lhs -= rhs;
        return lhs;
    }
    friend BigradedPoly operator*(BigradedPoly lhs, cplx s) {
        lhs *= s;
        return lhs;
    }
    friend BigradedPoly operator*(cplx s, BigradedPoly rhs) {
        rhs *= s;
        return rhs;
    }

    // Exact convolution product; gradings add term by term.
    BigradedPoly multiply(const BigradedPoly& rhs) const;
    friend BigradedPoly operator*(const BigradedPoly& lhs, const BigradedPoly& rhs) {
        return lhs.multiply(rhs);
    }

    // Complex conjugate polynomial: conj(p)(z, w) = conj(p evaluated at the
    // same point), realized by swapping a<->b, c<->d and conjugating
    // coefficients.
    BigradedPoly conjugate() const;

    // Formal partial derivatives.
    BigradedPoly d_z() const { return derivative(0); }
    BigradedPoly d_zbar() const { return derivative(1); }
    BigradedPoly d_w() const { return derivative(2); }
    BigradedPoly d_wbar() const { return derivative(3); }

    // Components keyed by antiholomorphic degree b + d.  Entries are nonzero.
    std::map<unsigned, BigradedPoly> grade_by_antiholo() const;

    // Component of a single antiholomorphic degree (zero polynomial if none).
    BigradedPoly antiholo_component(unsigned n) const;

    unsigned total_degree() const;
    unsigned max_antiholo_degree() const;
    unsigned max_exponent() const;  // max over terms of max(a,b,c,d)

    // coefficient(a,b,c,d) == conj(coefficient(b,a,d,c)) for every term,
    // within tol; such polynomials take real values.
    bool is_hermitian(double tol = 0.0) const;

    // Evaluation with zbar = conj(z), wbar = conj(w).
    cplx evaluate(cplx z, cplx w) const;

    // Substitute z = p1 + t*e1, w = p2 + t*e2 (and conjugates), producing a
    // polynomial in t, tbar stored in the (a, b) slots with c = d = 0.
    BigradedPoly restrict_to_line(cplx p1, cplx p2, cplx e1, cplx e2) const;

    // Substitute a fixed value for z (and zbar = conj z), leaving a
    // polynomial in w, wbar only; swap = true fixes w instead.
    BigradedPoly fix_first_variable(cplx value, bool swap = false) const;

    // Exchange the roles of the two complex variables: (a,b,c,d) -> (c,d,a,b).
    BigradedPoly swap_variables() const;

    double coeff_one_norm() const;
    double coeff_max_norm() const;

    // Remove terms with |coeff| <= tol (tol = 0 removes exact zeros only).
    void prune(double tol = 0.0);

    // Serialized as a list of {a,b,c,d,re,im}, sorted lexicographically by
    // (a,b,c,d) on write; read accepts any order and merges duplicates.
    std::string to_json() const;
    static BigradedPoly from_json(const std::string& text);

    friend bool operator==(const BigradedPoly&, const BigradedPoly&) = default;

    // Sup-norm bound on the truncated part when this polynomial stands in
    // for a power series; 0 means the representation is exact.
    double tail_bound = 0.0;

  private:
    BigradedPoly derivative(int slot) const;
    TermMap terms_;
};

// Table of powers of a fixed point, for evaluating many polynomials at the
// same point cheaply.
struct PowerTable {
    std::vector<cplx> z, zb, w, wb;
    PowerTable(cplx zval, cplx wval, unsigned max_exp);
    cplx evaluate(const BigradedPoly& p) const;
};

// The column vector of the mixed antiholomorphic monomials of total degree
// n >= 2: zbar^{n-1} wbar, zbar^{n-2} wbar^2, ..., zbar wbar^{n-1}
// (strictly decreasing zbar exponent, n - 1 entries).
struct MixedMonomialVector {
    unsigned degree = 2;

    explicit MixedMonomialVector(unsigned n);
    std::size_t size() const { return degree - 1; }
    // i is zero-based: entry i is zbar^{degree-1-i} wbar^{1+i}.
    Monomial4 monomial(std::size_t i) const;
    // Index of a mixed monomial of this degree in the vector, or -1.
    static long index_of(Monomial4 m);

    std::vector<cplx> values(cplx z, cplx w) const;
    // Euclidean norm of values(); bounded by (|z|^2+|w|^2)^(degree/2).
    double norm_at(cplx z, cplx w) const;
};

}  // namespace crh
