#include "qtree/label.hpp"

#include <istream>
#include <sstream>
#include <stdexcept>

namespace qtree {

InvocationLabel InvocationLabel::add(std::uint64_t sn, Round r, std::string v, Round rp,
                                     bool ok) {
  if (r.is_zero()) throw std::invalid_argument("add label requires a non-zero round");
  InvocationLabel l;
  l.instance = sn;
  l.kind = Kind::Add;
  l.round = r;
  l.value = std::move(v);
  l.parent = rp;
  l.ok = ok;
  return l;
}

InvocationLabel InvocationLabel::commit(std::uint64_t sn, Round r, bool ok) {
  InvocationLabel l;
  l.instance = sn;
  l.kind = Kind::Commit;
  l.round = r;
  l.ok = ok;
  return l;
}

std::string InvocationLabel::str(bool with_instance) const {
  std::string out;
  if (with_instance) out += "sn=" + std::to_string(instance) + " ";
  if (kind == Kind::Add) {
    out += "op=add r=" + round.str() + " v=" + value + " rp=" + parent.str();
  } else {
    out += "op=commit r=" + round.str();
  }
  out += ok ? " res=OK" : " res=FAIL";
  return out;
}

namespace {

bool next_field(std::string_view& rest, std::string_view& key, std::string_view& val) {
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.empty()) return false;
  auto sp = rest.find(' ');
  std::string_view tok = rest.substr(0, sp);
  rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
  auto eq = tok.find('=');
  if (eq == std::string_view::npos) return false;
  key = tok.substr(0, eq);
  val = tok.substr(eq + 1);
  return true;
}

}  // namespace

std::optional<InvocationLabel> InvocationLabel::parse(std::string_view line) {
  InvocationLabel l;
  std::string_view op, r, v, rp, res;
  bool have_op = false, have_r = false, have_res = false, have_v = false, have_rp = false;
  std::string_view rest = line, key, val;
  while (next_field(rest, key, val)) {
    if (key == "sn") {
      auto n = Round::parse(val);
      if (!n || n->form() != Round::Form::Nat) return std::nullopt;
      l.instance = n->value();
    } else if (key == "op") {
      op = val;
      have_op = true;
    } else if (key == "r") {
      r = val;
      have_r = true;
    } else if (key == "v") {
      v = val;
      have_v = true;
    } else if (key == "rp") {
      rp = val;
      have_rp = true;
    } else if (key == "res") {
      res = val;
      have_res = true;
    } else {
      return std::nullopt;
    }
  }
  if (!have_op || !have_r || !have_res) return std::nullopt;
  auto rr = Round::parse(r);
  if (!rr) return std::nullopt;
  l.round = *rr;
  if (res == "OK") l.ok = true;
  else if (res == "FAIL") l.ok = false;
  else return std::nullopt;
  if (op == "add") {
    if (!have_v || !have_rp || v.empty()) return std::nullopt;
    auto pr = Round::parse(rp);
    if (!pr || l.round.is_zero()) return std::nullopt;
    l.kind = Kind::Add;
    l.value = std::string(v);
    l.parent = *pr;
  } else if (op == "commit") {
    if (have_v || have_rp) return std::nullopt;
    l.kind = Kind::Commit;
  } else {
    return std::nullopt;
  }
  return l;
}

std::vector<InvocationLabel> parse_label_file(std::istream& in) {
  std::vector<InvocationLabel> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto l = InvocationLabel::parse(line);
    if (!l) throw std::runtime_error("bad label at line " + std::to_string(lineno));
    out.push_back(std::move(*l));
  }
  return out;
}

}  // namespace qtree
