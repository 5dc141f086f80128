#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "homeo/session.hpp"
#include "homeo/stabilizer.hpp"

namespace homeo {

// A dataflow fact: abstract location -> value tokens. std::nullopt is the
// top element (node not yet reached). For union analyses an absent key means
// the empty set; for intersection analyses it means "no information".
using Facts = std::optional<std::map<std::string, std::set<std::string>>>;

enum class Direction { Forward, Backward };
enum class MeetOp { Union, Intersect };

// Iterative dataflow over the super-graph with hybrid incremental updates:
// compute() solves from scratch by chaotic iteration; handleUpdate() reseeds
// from the net change and re-solves one strongly connected component at a
// time in topological order, with a first under-approximating pass that
// ignores not-yet-processed predecessors inside the current component and a
// second standard pass that restores the fixed point.
//
// Phase-aware extensions: along each inter-task edge (f1, f2) the shared
// facts of the communicable variables of OUT(f1) are met into IN(f2), and a
// barrier's OUT over shared locations is the meet of IN over every barrier
// in its synchronization sets.
class DataflowAnalysis : public Analysis {
 public:
  DataflowAnalysis(std::string name, Direction dir, MeetOp meet, Session& s);

  Direction direction() const { return dir_; }

  // Direction-adjusted facts: in(n) is the meet over the node's predecessors
  // in the direction of flow (for backward analyses these are the CFG
  // successors), out(n) = transfer(n, in(n)).
  Facts in(NodeId n);
  Facts out(NodeId n);

  // Independent from-scratch solver used as the incremental oracle.
  std::map<NodeId, std::pair<Facts, Facts>> computeFullSnapshot();

  // Current facts via the getter protocol, keyed by node.
  std::map<NodeId, std::pair<Facts, Facts>> snapshotFacts();

  std::string dump();

 protected:
  void compute() override;
  void handleUpdate(const ElemChange& net) override;

  virtual Facts transfer(NodeId n, const Facts& input) = 0;
  // True when this analysis consults the points-to oracle in its transfers;
  // such analyses reseed a dereferencing node on a net change whenever the
  // oracle slice the node last consumed has since changed.
  virtual bool usesPointerOracle() const { return false; }
  // The points-to pairs the transfer at `n` reads from the oracle; memoised
  // so incremental updates can skip dereferencing nodes whose slice is
  // unchanged.
  virtual std::map<std::string, std::set<std::string>> oracleSlice(NodeId) { return {}; }
  // Whether a fact entry belongs to the shared part for barrier meets.
  virtual bool entryIsShared(const std::string& key, const std::set<std::string>& vals) const;

  const Program& prog() const { return session_.program(); }
  std::string locate(NodeId n, const std::string& name) const;

 private:
  struct Indices {
    std::map<NodeId, std::vector<NodeId>> pred;       // cfg/call, direction-adjusted
    std::map<NodeId, std::vector<NodeId>> notifySucc; // incl. inter-task targets
    std::map<NodeId, std::vector<std::pair<NodeId, std::set<std::string>>>> ext1;
    std::map<NodeId, std::set<NodeId>> syncMates;     // incl. the barrier itself
    SccIndex scc;
    std::map<int, std::vector<NodeId>> sccMembers;    // in within-component order
    NodeId boundary = 0;
  };
  Indices buildIndices() const;

  Facts meetMaps(const Facts& a, const Facts& b) const;
  // Returns {inChanged, outChanged}. In the first (under-approximating) pass
  // `curScc`/`firstPass` restrict which same-component contributions count.
  std::pair<bool, bool> processNode(NodeId n, const Indices& ix,
                                    std::map<NodeId, std::pair<Facts, Facts>>& facts,
                                    int curScc, const std::set<NodeId>* firstPass);
  void solve(const Indices& ix, std::map<NodeId, std::pair<Facts, Facts>>& facts,
             const std::set<NodeId>& seeds, bool countWork);

  Session& session_;
  Direction dir_;
  MeetOp meet_;
  std::map<NodeId, std::pair<Facts, Facts>> facts_;
  std::map<NodeId, std::map<std::string, std::set<std::string>>> oracleMemo_;
  bool counting_ = false;
};

// Concrete analyses.
std::unique_ptr<DataflowAnalysis> makePointsTo(Session& s);
std::unique_ptr<DataflowAnalysis> makeReachingDefs(Session& s, DataflowAnalysis* pta);
std::unique_ptr<DataflowAnalysis> makeLiveness(Session& s, DataflowAnalysis* pta);
std::unique_ptr<DataflowAnalysis> makeCopyProp(Session& s, DataflowAnalysis* pta);

}  // namespace homeo
