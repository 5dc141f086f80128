#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "homeo/barrelim.hpp"
#include "homeo/hidfa.hpp"
#include "homeo/session.hpp"

namespace homeo {

struct RunConfig {
  Mode mode = Mode::EGUPD;
  bool strictRp = false;
  std::vector<std::string> analyses = {"pta", "rd", "lv", "cp"};
  bool optimize = true;  // run barrier elimination
  int repeat = 1;
};

struct RunReport {
  std::string mode;
  OptReport opt;
  std::map<std::string, Counters> counters;
  Counters total;
  bool countersConsistent = false;
  std::uint64_t factsDigest = 0;
  std::string optimizedSource;
  double seconds = 0;

  std::string toJson() const;
};

// Analyses wired to one session, in registration order (pta first: the
// other three consult it).
struct AnalysisSet {
  std::vector<std::unique_ptr<DataflowAnalysis>> owned;
  DataflowAnalysis* pta = nullptr;
  DataflowAnalysis* rd = nullptr;
  DataflowAnalysis* lv = nullptr;
  DataflowAnalysis* cp = nullptr;
};

AnalysisSet buildAnalyses(Session& s, const std::vector<std::string>& names);

// Parse, register, optimize, report. Repeat > 1 reruns the whole pipeline
// and reports the geometric-mean wall time (counters are identical across
// repeats by construction).
RunReport runPipeline(const std::string& source, const RunConfig& cfg);

// Every registered analysis' facts must equal an independent from-scratch
// solve; returns an empty string on success, else a description.
std::string verifyAnalysesExact(AnalysisSet& set);

std::uint64_t fnv1a(const std::string& s);

}  // namespace homeo
