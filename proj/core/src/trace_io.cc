#include "rpca/trace_io.h"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace rpca {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const IterationRecord& r, bool include_timing) {
  ordered_json j;
  j["type"] = "iteration";
  j["k"] = r.k;
  j["r_k"] = r.r_k;
  j["s_k"] = r.s_k;
  j["objective"] = r.objective;
  j["relaxed_objective"] = r.relaxed_objective;
  j["reference_objective"] = r.reference_objective;
  j["displacement"] = r.displacement;
  j["step_norm"] = r.step_norm;
  j["iota1"] = r.iota1;
  j["iota2"] = r.iota2;
  j["iota"] = r.iota;
  j["backtracks_joint"] = r.backtracks_joint;
  j["backtracks_sparse"] = r.backtracks_sparse;
  j["support_cols"] = r.support_cols;
  j["nnzc_x"] = r.nnzc_x;
  j["nnzc_y"] = r.nnzc_y;
  j["support_entries"] = r.support_entries;
  j["off_support_violations"] = r.off_support_violations;
  if (include_timing) j["seconds"] = r.seconds;
  return j;
}

IterationRecord from_json(const ordered_json& j) {
  IterationRecord r;
  r.k = j.at("k").get<int>();
  r.r_k = j.at("r_k").get<double>();
  r.s_k = j.at("s_k").get<double>();
  r.objective = j.at("objective").get<double>();
  r.relaxed_objective = j.at("relaxed_objective").get<double>();
  r.reference_objective = j.at("reference_objective").get<double>();
  r.displacement = j.at("displacement").get<double>();
  r.step_norm = j.at("step_norm").get<double>();
  r.iota1 = j.at("iota1").get<double>();
  r.iota2 = j.at("iota2").get<double>();
  r.iota = j.at("iota").get<double>();
  r.backtracks_joint = j.at("backtracks_joint").get<int>();
  r.backtracks_sparse = j.at("backtracks_sparse").get<int>();
  r.support_cols = j.at("support_cols").get<int>();
  r.nnzc_x = j.at("nnzc_x").get<int>();
  r.nnzc_y = j.at("nnzc_y").get<int>();
  r.support_entries = j.at("support_entries").get<std::size_t>();
  r.off_support_violations = j.at("off_support_violations").get<std::size_t>();
  r.seconds = j.value("seconds", 0.0);
  return r;
}

StopReason stop_from_string(const std::string& s) {
  if (s == to_string(StopReason::kConverged)) return StopReason::kConverged;
  if (s == to_string(StopReason::kMaxIterations)) return StopReason::kMaxIterations;
  throw std::runtime_error("unknown stop reason '" + s + "'");
}

}  // namespace

std::string iteration_to_json(const IterationRecord& record, bool include_timing) {
  return to_json(record, include_timing).dump();
}

void write_trace(std::ostream& out, const RunTrace& trace, bool include_timing) {
  for (const IterationRecord& r : trace.iterations) {
    out << to_json(r, include_timing).dump() << '\n';
  }
  ordered_json end;
  end["type"] = "end";
  end["stop"] = to_string(trace.stop);
  end["iterations"] = trace.iterations.size();
  if (include_timing) end["seconds"] = trace.seconds;
  out << end.dump() << '\n';
}

RunTrace read_trace(std::istream& in) {
  RunTrace trace;
  bool ended = false;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (ended) throw std::runtime_error("trace line " + std::to_string(number) + " after end");
    try {
      const ordered_json j = ordered_json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "iteration") {
        trace.iterations.push_back(from_json(j));
      } else if (type == "end") {
        trace.stop = stop_from_string(j.at("stop").get<std::string>());
        trace.seconds = j.value("seconds", 0.0);
        if (j.at("iterations").get<std::size_t>() != trace.iterations.size()) {
          throw std::runtime_error("iteration count does not match");
        }
        ended = true;
      } else {
        throw std::runtime_error("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (!ended) throw std::runtime_error("trace has no end record");
  return trace;
}

}  // namespace rpca
