#include "crh/poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "crh/errors.hpp"
#include "json.hpp"

namespace crh {

void BigradedPoly::add_term(Monomial4 m, cplx coeff) {
    if (coeff == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(m, coeff);
    if (!inserted) {
        it->second += coeff;
        if (it->second == 0.0) terms_.erase(it);
    }
}

BigradedPoly& BigradedPoly::operator+=(const BigradedPoly& rhs) {
    for (const auto& [m, c] : rhs.terms_) add_term(m, c);
    return *this;
}

BigradedPoly& BigradedPoly::operator-=(const BigradedPoly& rhs) {
    for (const auto& [m, c] : rhs.terms_) add_term(m, -c);
    return *this;
}

BigradedPoly& BigradedPoly::operator*=(cplx s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, c] : terms_) c *= s;
    return *this;
}

BigradedPoly BigradedPoly::multiply(const BigradedPoly& rhs) const {
    BigradedPoly out;
    for (const auto& [m1, c1] : terms_)
        for (const auto& [m2, c2] : rhs.terms_)
            out.add_term({m1.a + m2.a, m1.b + m2.b, m1.c + m2.c, m1.d + m2.d},
                         c1 * c2);
    return out;
}

BigradedPoly BigradedPoly::conjugate() const {
    BigradedPoly out;
    for (const auto& [m, c] : terms_) out.add_term(m.conj(), std::conj(c));
    return out;
}

BigradedPoly BigradedPoly::derivative(int slot) const {
    BigradedPoly out;
    for (const auto& [m, c] : terms_) {
        Monomial4 r = m;
        unsigned* e = nullptr;
        switch (slot) {
            case 0: e = &r.a; break;
            case 1: e = &r.b; break;
            case 2: e = &r.c; break;
            default: e = &r.d; break;
        }
        if (*e == 0) continue;
        double k = static_cast<double>(*e);
        --*e;
        out.add_term(r, c * k);
    }
    return out;
}

std::map<unsigned, BigradedPoly> BigradedPoly::grade_by_antiholo() const {
    std::map<unsigned, BigradedPoly> out;
    for (const auto& [m, c] : terms_) out[m.antiholo_degree()].add_term(m, c);
    return out;
}

BigradedPoly BigradedPoly::antiholo_component(unsigned n) const {
    BigradedPoly out;
    for (const auto& [m, c] : terms_)
        if (m.antiholo_degree() == n) out.add_term(m, c);
    return out;
}

unsigned BigradedPoly::total_degree() const {
    unsigned deg = 0;
    for (const auto& [m, c] : terms_) deg = std::max(deg, m.total_degree());
    return deg;
}

unsigned BigradedPoly::max_antiholo_degree() const {
    unsigned deg = 0;
    for (const auto& [m, c] : terms_) deg = std::max(deg, m.antiholo_degree());
    return deg;
}

unsigned BigradedPoly::max_exponent() const {
    unsigned e = 0;
    for (const auto& [m, c] : terms_)
        e = std::max({e, m.a, m.b, m.c, m.d});
    return e;
}

bool BigradedPoly::is_hermitian(double tol) const {
    for (const auto& [m, c] : terms_) {
        cplx other = coefficient(m.conj());
        if (std::abs(c - std::conj(other)) > tol) return false;
    }
    return true;
}

namespace {
cplx ipow(cplx base, unsigned e) {
    cplx r = 1.0;
    while (e) {
        if (e & 1u) r *= base;
        base *= base;
        e >>= 1u;
    }
    return r;
}
}  // namespace

cplx BigradedPoly::evaluate(cplx z, cplx w) const {
    cplx zb = std::conj(z), wb = std::conj(w);
    cplx acc = 0.0;
    for (const auto& [m, c] : terms_)
        acc += c * ipow(z, m.a) * ipow(zb, m.b) * ipow(w, m.c) * ipow(wb, m.d);
    return acc;
}

BigradedPoly BigradedPoly::restrict_to_line(cplx p1, cplx p2, cplx e1,
                                            cplx e2) const {
    // z-slot of the output holds the t exponent, zbar-slot holds tbar.
    auto affine_pow = [](cplx p, cplx e, unsigned n) {
        // (p + t e)^n as coefficients of t^0..t^n
        std::vector<cplx> coef(n + 1);
        for (unsigned k = 0; k <= n; ++k) {
            double binom = 1.0;
            for (unsigned j = 0; j < k; ++j)
                binom = binom * double(n - j) / double(j + 1);
            coef[k] = binom * ipow(p, n - k) * ipow(e, k);
        }
        return coef;
    };
    BigradedPoly out;
    for (const auto& [m, c] : terms_) {
        auto za = affine_pow(p1, e1, m.a);
        auto zb = affine_pow(std::conj(p1), std::conj(e1), m.b);
        auto wa = affine_pow(p2, e2, m.c);
        auto wbp = affine_pow(std::conj(p2), std::conj(e2), m.d);
        for (unsigned i = 0; i < za.size(); ++i)
            for (unsigned j = 0; j < zb.size(); ++j)
                for (unsigned k = 0; k < wa.size(); ++k)
                    for (unsigned l = 0; l < wbp.size(); ++l)
                        out.add_term({i + k, j + l, 0, 0},
                                     c * za[i] * zb[j] * wa[k] * wbp[l]);
    }
    return out;
}

BigradedPoly BigradedPoly::fix_first_variable(cplx value, bool swap) const {
    BigradedPoly out;
    cplx vb = std::conj(value);
    for (const auto& [m, c] : terms_) {
        if (!swap) {
            out.add_term({0, 0, m.c, m.d}, c * ipow(value, m.a) * ipow(vb, m.b));
        } else {
            out.add_term({m.a, m.b, 0, 0}, c * ipow(value, m.c) * ipow(vb, m.d));
        }
    }
    return out;
}

BigradedPoly BigradedPoly::swap_variables() const {
    BigradedPoly out;
    for (const auto& [m, c] : terms_) out.add_term({m.c, m.d, m.a, m.b}, c);
    return out;
}

double BigradedPoly::coeff_one_norm() const {
    double s = 0.0;
    for (const auto& [m, c] : terms_) s += std::abs(c);
    return s;
}

double BigradedPoly::coeff_max_norm() const {
    double s = 0.0;
    for (const auto& [m, c] : terms_) s = std::max(s, std::abs(c));
    return s;
}

void BigradedPoly::prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol)
            it = terms_.erase(it);
        else
            ++it;
    }
}

std::string BigradedPoly::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [m, c] : terms_) {
        arr.push_back({{"a", m.a},
                       {"b", m.b},
                       {"c", m.c},
                       {"d", m.d},
                       {"re", c.real()},
                       {"im", c.imag()}});
    }
    return arr.dump();
}

BigradedPoly BigradedPoly::from_json(const std::string& text) {
    nlohmann::json arr = nlohmann::json::parse(text);
    if (!arr.is_array()) throw InvalidInput("polynomial JSON must be an array");
    BigradedPoly out;
    for (const auto& t : arr) {
        Monomial4 m{t.at("a").get<unsigned>(), t.at("b").get<unsigned>(),
                    t.at("c").get<unsigned>(), t.at("d").get<unsigned>()};
        out.add_term(m, cplx(t.at("re").get<double>(), t.at("im").get<double>()));
    }
    return out;
}

PowerTable::PowerTable(cplx zval, cplx wval, unsigned max_exp) {
    auto fill = [max_exp](std::vector<cplx>& v, cplx base) {
        v.resize(max_exp + 1);
        v[0] = 1.0;
        for (unsigned i = 1; i <= max_exp; ++i) v[i] = v[i - 1] * base;
    };
    fill(z, zval);
    fill(zb, std::conj(zval));
    fill(w, wval);
    fill(wb, std::conj(wval));
}

cplx PowerTable::evaluate(const BigradedPoly& p) const {
    cplx acc = 0.0;
    for (const auto& [m, c] : p.terms())
        acc += c * z[m.a] * zb[m.b] * w[m.c] * wb[m.d];
    return acc;
}

MixedMonomialVector::MixedMonomialVector(unsigned n) : degree(n) {
    if (n < 2) throw InvalidInput("mixed monomial vector needs degree >= 2");
}

Monomial4 MixedMonomialVector::monomial(std::size_t i) const {
    return {0, degree - 1 - static_cast<unsigned>(i), 0,
            1 + static_cast<unsigned>(i)};
}

long MixedMonomialVector::index_of(Monomial4 m) {
    if (m.a != 0 || m.c != 0 || m.b < 1 || m.d < 1) return -1;
    return static_cast<long>(m.d) - 1;
}

std::vector<cplx> MixedMonomialVector::values(cplx z, cplx w) const {
    cplx zb = std::conj(z), wb = std::conj(w);
    std::vector<cplx> v(size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = ipow(zb, degree - 1 - i) * ipow(wb, 1 + i);
    return v;
}

double MixedMonomialVector::norm_at(cplx z, cplx w) const {
    double s = 0.0;
    for (cplx v : values(z, w)) s += std::norm(v);
    return std::sqrt(s);
}

}  // namespace crh
