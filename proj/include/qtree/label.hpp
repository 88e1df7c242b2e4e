#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtree/round.hpp"

namespace qtree {

// One add/commit invocation with its recorded outcome, tagged with the
// instance (sequence number) it applies to. Text form, one per line:
//   sn=<n> op=add r=<r> v=<token> rp=<rp> res=<OK|FAIL>
//   sn=<n> op=commit r=<r> res=<OK|FAIL>
// The sn= field may be omitted (instance 0) by single-instance emitters.
struct InvocationLabel {
  enum class Kind { Add, Commit };

  std::uint64_t instance = 0;
  Kind kind = Kind::Add;
  Round round;
  std::string value;  // add only
  Round parent;       // add only
  bool ok = true;

  // throws std::invalid_argument when r is the zero round
  static InvocationLabel add(std::uint64_t sn, Round r, std::string v, Round rp,
                             bool ok = true);
  static InvocationLabel commit(std::uint64_t sn, Round r, bool ok = true);

  std::string str(bool with_instance = true) const;
  static std::optional<InvocationLabel> parse(std::string_view line);

  friend bool operator==(const InvocationLabel&, const InvocationLabel&) = default;
};

// Throws std::runtime_error naming the 1-based line number on bad input.
// Blank lines and lines starting with '#' are skipped.
std::vector<InvocationLabel> parse_label_file(std::istream& in);

}  // namespace qtree
