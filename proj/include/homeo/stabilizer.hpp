#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "homeo/changelog.hpp"

namespace homeo {

enum class Mode { EGINV, EGUPD, RPINV, RPUPD, LZINV, LZUPD };

const char* modeName(Mode m);
Mode modeFromString(const std::string& s);
std::vector<Mode> allModes();

inline bool isEager(Mode m) { return m == Mode::EGINV || m == Mode::EGUPD; }
inline bool isRelevantPoint(Mode m) { return m == Mode::RPINV || m == Mode::RPUPD; }
inline bool isLazy(Mode m) { return m == Mode::LZINV || m == Mode::LZUPD; }
inline bool isUpdateMode(Mode m) {
  return m == Mode::EGUPD || m == Mode::RPUPD || m == Mode::LZUPD;
}

enum class AnalysisStatus { Stable, Unstable, Processing };

// Internal invariant violation in the stabilization engine (exit code 2).
struct EngineFault : std::runtime_error {
  explicit EngineFault(const std::string& m) : std::runtime_error(m) {}
};

// Query of an unstable analysis between relevant change points under
// --strict-rp (exit code 3).
struct StrictRpViolation : std::runtime_error {
  explicit StrictRpViolation(const std::string& m) : std::runtime_error(m) {}
};

struct Counters {
  long stabilizationTriggers = 0;
  long computeCalls = 0;
  long handleUpdateCalls = 0;
  long nodesReprocessed = 0;
  long transferApplications = 0;

  void reset() { *this = Counters{}; }
  Counters& operator+=(const Counters& o);
};

class Stabilizer;

// Base for every registered analysis. Subclasses implement compute (from
// scratch) and handleUpdate (consume the folded net change since their
// cursor); the stabilizer drives status transitions and the cursor.
class Analysis {
 public:
  explicit Analysis(std::string name) : name_(std::move(name)) {}
  virtual ~Analysis() = default;

  const std::string& name() const { return name_; }
  AnalysisStatus status() const { return status_; }
  const Counters& counters() const { return counters_; }
  Counters& counters() { return counters_; }

 protected:
  virtual void compute() = 0;
  virtual void handleUpdate(const ElemChange& net) = 0;

  // Getter guard; returns false when the query hits this analysis while it is
  // already being stabilized (the getter must answer with its initial value).
  bool beginQuery() const;

  std::string name_;
  Stabilizer* owner_ = nullptr;

 private:
  friend class Stabilizer;
  AnalysisStatus status_ = AnalysisStatus::Unstable;
  size_t cursor_ = 0;
  Counters counters_;
};

// Observer registry implementing the six stabilization disciplines. All
// program mutation goes through elementary transformations, which append to
// the change log and then call notify().
class Stabilizer {
 public:
  Stabilizer(Mode mode, ChangeLog& log, bool strictRp = false)
      : mode_(mode), strictRp_(strictRp), log_(&log) {}

  Mode mode() const { return mode_; }
  bool strictRp() const { return strictRp_; }
  ChangeLog& log() { return *log_; }

  // Runs the initial compute and pins the cursor at the log head.
  void registerAnalysis(Analysis* a);

  // Called after each elementary transformation has been logged.
  void notify();

  // Relevant change point: stabilize the named analyses (all when empty).
  void stabilizeNow(const std::vector<std::string>& names = {});

  // Getter-side guard; returns false when the caller must answer with its
  // initial value (query during its own stabilization).
  bool ensureStable(Analysis& a);

  const std::vector<Analysis*>& analyses() const { return order_; }
  Analysis* find(const std::string& name) const;
  void resetCounters();
  Counters totalCounters() const;

 private:
  void stabilize(Analysis& a);
  void compactLog();

  Mode mode_;
  bool strictRp_;
  ChangeLog* log_;
  std::vector<Analysis*> order_;
  std::map<std::string, Analysis*> byName_;
  bool inNotify_ = false;
  int stabilizing_ = 0;  // depth; queries during stabilization are permitted
};

}  // namespace homeo
