#include "qtree/trace.hpp"

#include <istream>
#include <stdexcept>

namespace qtree::sim {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Send: return "send";
    case EventKind::Deliver: return "deliver";
    case EventKind::Drop: return "drop";
    case EventKind::Timeout: return "timeout";
    case EventKind::Decide: return "decide";
    case EventKind::Linpoint: return "linpoint";
    case EventKind::Quiesce: return "quiesce";
  }
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
  if (s == "send") return EventKind::Send;
  if (s == "deliver") return EventKind::Deliver;
  if (s == "drop") return EventKind::Drop;
  if (s == "timeout") return EventKind::Timeout;
  if (s == "decide") return EventKind::Decide;
  if (s == "linpoint") return EventKind::Linpoint;
  if (s == "quiesce") return EventKind::Quiesce;
  return std::nullopt;
}

std::string render_decide(const DecideInfo& d) {
  std::string out = "sn=" + std::to_string(d.sn) + " r=" + d.round.str() + " v=" + d.value;
  if (d.index >= 0) out += " i=" + std::to_string(d.index);
  if (!d.branch.empty()) {
    out += " branch=";
    for (size_t i = 0; i < d.branch.size(); ++i) {
      if (i) out += ',';
      out += d.branch[i];
    }
  }
  return out;
}

std::string TraceEvent::line() const {
  std::string out = "step=" + std::to_string(step);
  out += " kind=";
  out += to_string(kind);
  out += " proc=" + std::to_string(proc);
  if (!text.empty()) {
    out += ' ';
    out += text;
  }
  return out;
}

std::string Trace::render() const {
  std::string out;
  out.reserve(64 * events.size() + header.size() + 4);
  if (!header.empty()) {
    out += "# ";
    out += header;
    out += '\n';
  }
  for (const auto& e : events) {
    out += e.line();
    out += '\n';
  }
  return out;
}

std::uint64_t Trace::digest() const {
  std::string s = render();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

// splits "key=value" prefix fields off a line, stopping after `n` fields;
// the remainder stays in `rest`
bool take_field(std::string_view& rest, std::string_view key, std::string_view& val) {
  if (rest.substr(0, key.size()) != key || rest.size() <= key.size() ||
      rest[key.size()] != '=')
    return false;
  rest.remove_prefix(key.size() + 1);
  auto sp = rest.find(' ');
  val = rest.substr(0, sp);
  rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
  return true;
}

DecideInfo parse_decide(std::string_view text, size_t lineno) {
  DecideInfo d;
  std::string_view rest = text;
  while (!rest.empty()) {
    auto sp = rest.find(' ');
    std::string_view tok = rest.substr(0, sp);
    rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
    auto eq = tok.find('=');
    if (eq == std::string_view::npos)
      throw std::runtime_error("bad decide field at line " + std::to_string(lineno));
    std::string_view key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "sn") {
      d.sn = std::stoull(std::string(val));
    } else if (key == "r") {
      auto r = Round::parse(val);
      if (!r) throw std::runtime_error("bad decide round at line " + std::to_string(lineno));
      d.round = *r;
    } else if (key == "v") {
      d.value = std::string(val);
    } else if (key == "i") {
      d.index = std::stol(std::string(val));
    } else if (key == "branch") {
      std::string_view b = val;
      while (!b.empty()) {
        auto c = b.find(',');
        d.branch.emplace_back(b.substr(0, c));
        if (c == std::string_view::npos) break;
        b.remove_prefix(c + 1);
      }
    }
  }
  return d;
}

}  // namespace

Trace Trace::parse(std::istream& in) {
  Trace t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (t.header.empty() && line.size() > 2) t.header = line.substr(2);
      continue;
    }
    std::string_view rest = line, step, kind, proc;
    if (!take_field(rest, "step", step) || !take_field(rest, "kind", kind) ||
        !take_field(rest, "proc", proc))
      throw std::runtime_error("bad trace event at line " + std::to_string(lineno));
    auto k = event_kind_from_string(kind);
    if (!k) throw std::runtime_error("bad event kind at line " + std::to_string(lineno));
    TraceEvent e;
    e.step = std::stoi(std::string(step));
    e.kind = *k;
    e.proc = std::stoi(std::string(proc));
    e.text = std::string(rest);
    if (e.kind == EventKind::Linpoint) {
      auto l = InvocationLabel::parse(rest);
      if (!l) throw std::runtime_error("bad linpoint label at line " + std::to_string(lineno));
      e.label = std::move(*l);
    } else if (e.kind == EventKind::Decide) {
      e.decide = parse_decide(rest, lineno);
    }
    t.events.push_back(std::move(e));
  }
  return t;
}

}  // namespace qtree::sim
