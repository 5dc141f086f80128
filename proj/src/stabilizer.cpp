#include "homeo/stabilizer.hpp"

#include <algorithm>

namespace homeo {

const char* modeName(Mode m) {
  switch (m) {
    case Mode::EGINV: return "eginv";
    case Mode::EGUPD: return "egupd";
    case Mode::RPINV: return "rpinv";
    case Mode::RPUPD: return "rpupd";
    case Mode::LZINV: return "lzinv";
    case Mode::LZUPD: return "lzupd";
  }
  return "?";
}

Mode modeFromString(const std::string& s) {
  for (Mode m : allModes()) {
    if (s == modeName(m)) return m;
  }
  throw std::invalid_argument("unknown mode: " + s);
}

std::vector<Mode> allModes() {
  return {Mode::EGINV, Mode::EGUPD, Mode::RPINV, Mode::RPUPD, Mode::LZINV, Mode::LZUPD};
}

Counters& Counters::operator+=(const Counters& o) {
  stabilizationTriggers += o.stabilizationTriggers;
  computeCalls += o.computeCalls;
  handleUpdateCalls += o.handleUpdateCalls;
  nodesReprocessed += o.nodesReprocessed;
  transferApplications += o.transferApplications;
  return *this;
}

bool Analysis::beginQuery() const {
  if (!owner_) throw EngineFault("analysis '" + name_ + "' queried before registration");
  return owner_->ensureStable(const_cast<Analysis&>(*this));
}

void Stabilizer::registerAnalysis(Analysis* a) {
  if (byName_.count(a->name())) throw EngineFault("duplicate analysis: " + a->name());
  a->owner_ = this;
  order_.push_back(a);
  byName_[a->name()] = a;
  a->status_ = AnalysisStatus::Processing;
  a->counters().computeCalls++;
  a->compute();
  a->cursor_ = log_->head();
  a->status_ = AnalysisStatus::Stable;
}

void Stabilizer::notify() {
  if (inNotify_ || stabilizing_ > 0) {
    throw EngineFault("transformation issued during stabilization");
  }
  inNotify_ = true;
  for (Analysis* a : order_) a->status_ = AnalysisStatus::Unstable;
  if (isEager(mode_)) {
    for (Analysis* a : order_) stabilize(*a);
  }
  inNotify_ = false;
  compactLog();
}

void Stabilizer::stabilizeNow(const std::vector<std::string>& names) {
  if (names.empty()) {
    for (Analysis* a : order_) stabilize(*a);
  } else {
    for (const std::string& n : names) {
      Analysis* a = find(n);
      if (!a) throw EngineFault("stabilizeNow on unknown analysis: " + n);
      stabilize(*a);
    }
  }
  compactLog();
}

bool Stabilizer::ensureStable(Analysis& a) {
  switch (a.status_) {
    case AnalysisStatus::Stable:
      return true;
    case AnalysisStatus::Processing:
      return false;
    case AnalysisStatus::Unstable:
      if (strictRp_ && isRelevantPoint(mode_) && stabilizing_ == 0) {
        throw StrictRpViolation("analysis '" + a.name_ +
                                "' queried while unstable between change points");
      }
      stabilize(a);
      return true;
  }
  return true;
}

void Stabilizer::stabilize(Analysis& a) {
  if (a.status_ == AnalysisStatus::Stable) return;
  if (a.status_ == AnalysisStatus::Processing) {
    throw EngineFault("re-entrant stabilization of analysis: " + a.name_);
  }
  a.status_ = AnalysisStatus::Processing;
  ++stabilizing_;
  a.counters().stabilizationTriggers++;
  ElemChange net = log_->netChanges(a.cursor_);
  try {
    if (isUpdateMode(mode_)) {
      a.counters().handleUpdateCalls++;
      a.handleUpdate(net);
    } else {
      a.counters().computeCalls++;
      a.compute();
    }
  } catch (const EngineFault&) {
    --stabilizing_;
    throw;
  } catch (const std::exception&) {
    // A failed incremental update must not leave the analysis wedged;
    // fall back to recomputing from scratch.
    a.counters().computeCalls++;
    a.compute();
  }
  a.cursor_ = log_->head();
  a.status_ = AnalysisStatus::Stable;
  --stabilizing_;
}

void Stabilizer::compactLog() {
  size_t minCursor = log_->head();
  for (Analysis* a : order_) minCursor = std::min(minCursor, a->cursor_);
  log_->compact(minCursor);
}

Analysis* Stabilizer::find(const std::string& name) const {
  auto it = byName_.find(name);
  return it == byName_.end() ? nullptr : it->second;
}

void Stabilizer::resetCounters() {
  for (Analysis* a : order_) a->counters().reset();
}

Counters Stabilizer::totalCounters() const {
  Counters t;
  for (Analysis* a : order_) t += a->counters();
  return t;
}

}  // namespace homeo
