#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qtree/config.hpp"
#include "qtree/trace.hpp"

namespace qtree::figures {

// Bundled golden scenarios. fig2 exercises the tree object directly with a
// canonical add/commit sequence; fig3 replays a scripted single-decree run
// where a slow leader's proposal lands between a later round's proposal and
// its decision; fig4 is the analogous byzantine multi-decree run on decree 1.
struct FigureOutput {
  std::string name;
  std::string linpoints;  // one label line per linearization point
  std::string qtree;      // final state snapshot plus trunk line
};

std::vector<std::string> figure_names();
FigureOutput run_figure(const std::string& name);  // throws on unknown name

struct GoldenDiff {
  bool ok = true;
  std::string diff;  // unified-style line diff when not ok
};

// Compares actual output against <dir>/<name>_linpoints.txt and
// <dir>/<name>_qtree.txt.
GoldenDiff compare_with_goldens(const FigureOutput& out, const std::string& dir);

// Writes the two golden files for a figure into dir.
void write_goldens(const FigureOutput& out, const std::string& dir);

}  // namespace qtree::figures
