#include "crh/expr.hpp"

#include <cctype>
#include <cstdlib>
#include <string>

#include "crh/errors.hpp"

namespace crh {

namespace {

// Exponents above this turn a typo like z^1000000 into a memory bomb.
constexpr unsigned kMaxExponent = 64;

class Parser {
  public:
    explicit Parser(const std::string& text) : text_(text) {}

    BigradedPoly run() {
        BigradedPoly value = parse_sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return value;
    }

  private:
    [[noreturn]] void fail(const std::string& reason) const {
        throw InvalidInput("expression parse error at position " +
                           std::to_string(pos_) + ": " + reason);
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    bool word_ahead(const std::string& word) {
        skip_space();
        if (text_.compare(pos_, word.size(), word) != 0) return false;
        const std::size_t end = pos_ + word.size();
        if (end < text_.size()) {
            const char next = text_[end];
            if (std::isalnum(static_cast<unsigned char>(next)) || next == '_')
                return false;
        }
        pos_ = end;
        return true;
    }

    BigradedPoly parse_sum() {
        BigradedPoly value = parse_product();
        while (true) {
            if (consume('+'))
                value += parse_product();
            else if (consume('-'))
                value -= parse_product();
            else
                return value;
        }
    }

    BigradedPoly parse_product() {
        BigradedPoly value = parse_power();
        while (consume('*')) value = value * parse_power();
        return value;
    }

    BigradedPoly parse_power() {
        BigradedPoly base = parse_atom();
        if (!consume('^')) return base;
        skip_space();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("exponent must be a nonnegative integer");
        unsigned long exponent = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            exponent = exponent * 10 + static_cast<unsigned long>(text_[pos_] - '0');
            if (exponent > kMaxExponent) fail("exponent too large");
            ++pos_;
        }
        BigradedPoly value{cplx(1.0)};
        for (unsigned long k = 0; k < exponent; ++k) value = value * base;
        return value;
    }

    BigradedPoly parse_atom() {
        skip_space();
        if (pos_ >= text_.size()) fail("expected a value");
        if (consume('(')) {
            BigradedPoly inner = parse_sum();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if (consume('-')) return BigradedPoly(cplx(-1.0)) * parse_power();
        if (consume('+')) return parse_power();
        if (word_ahead("conj")) {
            if (!consume('(')) fail("expected '(' after conj");
            BigradedPoly inner = parse_sum();
            if (!consume(')')) fail("expected ')'");
            return inner.conjugate();
        }
        if (word_ahead("abs2")) {
            if (!consume('(')) fail("expected '(' after abs2");
            BigradedPoly inner = parse_sum();
            if (!consume(')')) fail("expected ')'");
            return inner * inner.conjugate();
        }
        if (word_ahead("zbar")) return BigradedPoly::monomial({0, 1, 0, 0});
        if (word_ahead("wbar")) return BigradedPoly::monomial({0, 0, 0, 1});
        if (word_ahead("z")) return BigradedPoly::monomial({1, 0, 0, 0});
        if (word_ahead("w")) return BigradedPoly::monomial({0, 0, 1, 0});
        if (word_ahead("i")) return BigradedPoly(cplx(0.0, 1.0));
        const char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        fail(std::string("unexpected character '") + c + "'");
    }

    BigradedPoly parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        if (pos_ < text_.size() && text_[pos_] == 'i') {
            ++pos_;
            return BigradedPoly(cplx(0.0, value));
        }
        return BigradedPoly(cplx(value));
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

}  // namespace

BigradedPoly parse_poly_expr(const std::string& text) {
    return Parser(text).run();
}

}  // namespace crh
