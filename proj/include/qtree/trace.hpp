#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qtree/label.hpp"
#include "qtree/round.hpp"

namespace qtree::sim {

enum class EventKind { Send, Deliver, Drop, Timeout, Decide, Linpoint, Quiesce };

std::string_view to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(std::string_view s);

// A decision taken by a process, as recorded in the trace. index is the log
// position for log-replication protocols (-1 otherwise); branch carries the
// decided command chain for tree-structured protocols.
struct DecideInfo {
  std::uint64_t sn = 0;
  Round round;
  std::string value;
  long index = -1;
  std::vector<std::string> branch;
};

// One line of a run record:
//   step=<k> kind=<kind> proc=<id> <payload summary>
// Linpoint events additionally carry the parsed invocation label, decide
// events the parsed decision. Events within one scheduler step share its
// step number.
struct TraceEvent {
  int step = 0;
  EventKind kind = EventKind::Send;
  int proc = -1;
  std::string text;
  std::optional<InvocationLabel> label;
  std::optional<DecideInfo> decide;

  std::string line() const;
};

struct Trace {
  std::string header;  // config echo, rendered as a leading '# ...' comment
  std::vector<TraceEvent> events;

  std::string render() const;
  std::uint64_t digest() const;  // FNV-1a over the rendered bytes

  // Parses a rendered trace; throws std::runtime_error with a line number
  // on malformed input.
  static Trace parse(std::istream& in);
};

std::string render_decide(const DecideInfo& d);

}  // namespace qtree::sim
