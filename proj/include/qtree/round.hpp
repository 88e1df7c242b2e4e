#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace qtree {

// Totally ordered round identifier. Two concrete forms share one type:
// plain naturals ("5"), and (term, index) pairs ("2.1") ordered
// lexicographically. Round zero (both components 0) is the reserved root
// round; in the pair form it sits below every (t, i) with t >= 1.
class Round {
 public:
  enum class Form : std::uint8_t { Nat, Pair };

  constexpr Round() = default;  // nat 0
  static constexpr Round nat(std::uint64_t k) { return Round(Form::Nat, k, 0); }
  static constexpr Round pair(std::uint64_t term, std::uint64_t index) {
    return Round(Form::Pair, term, index);
  }
  static constexpr Round zero(Form f) { return Round(f, 0, 0); }

  constexpr Form form() const { return form_; }
  constexpr bool is_zero() const { return a_ == 0 && b_ == 0; }
  constexpr std::uint64_t value() const { return a_; }  // nat value, or pair term
  constexpr std::uint64_t index() const { return b_; }  // pair index

  // Lexicographic on (a, b); the form participates only as a final tiebreak
  // so that mixed-form containers still see a total order. A single tree
  // never mixes forms.
  friend constexpr std::strong_ordering operator<=>(const Round& x, const Round& y) {
    if (auto c = x.a_ <=> y.a_; c != 0) return c;
    if (auto c = x.b_ <=> y.b_; c != 0) return c;
    return x.form_ <=> y.form_;
  }
  friend constexpr bool operator==(const Round& x, const Round& y) {
    return x.form_ == y.form_ && x.a_ == y.a_ && x.b_ == y.b_;
  }

  std::string str() const {
    if (form_ == Form::Nat) return std::to_string(a_);
    return std::to_string(a_) + "." + std::to_string(b_);
  }

  // "5" parses as a nat round, "2.1" as a pair round.
  static std::optional<Round> parse(std::string_view s) {
    if (s.empty()) return std::nullopt;
    auto dot = s.find('.');
    if (dot == std::string_view::npos) {
      auto v = parse_u64(s);
      if (!v) return std::nullopt;
      return nat(*v);
    }
    auto t = parse_u64(s.substr(0, dot));
    auto i = parse_u64(s.substr(dot + 1));
    if (!t || !i) return std::nullopt;
    return pair(*t, *i);
  }

 private:
  constexpr Round(Form f, std::uint64_t a, std::uint64_t b) : form_(f), a_(a), b_(b) {}

  static std::optional<std::uint64_t> parse_u64(std::string_view s) {
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
  }

  Form form_ = Form::Nat;
  std::uint64_t a_ = 0;
  std::uint64_t b_ = 0;
};

}  // namespace qtree
