#pragma once

#include <iosfwd>
#include <string>

#include "rpca/solver.h"

namespace rpca {

// Line-delimited trace: one JSON object per iteration with "type":
// "iteration" and the IterationRecord field names, followed by a single
// {"type": "end", "stop": ..., "iterations": ..., "seconds": ...} line.
// Doubles are written in shortest round-trip form. With include_timing =
// false the wall-clock fields are omitted, which makes traces of identical
// runs byte-identical.
void write_trace(std::ostream& out, const RunTrace& trace, bool include_timing = true);
RunTrace read_trace(std::istream& in);

std::string iteration_to_json(const IterationRecord& record, bool include_timing = true);

}  // namespace rpca
