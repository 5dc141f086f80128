#include "homeo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "json.hpp"

#include "homeo/parser.hpp"

namespace homeo {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

AnalysisSet buildAnalyses(Session& s, const std::vector<std::string>& names) {
  AnalysisSet set;
  auto wants = [&names](const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };
  bool needPta = wants("pta") || wants("rd") || wants("lv") || wants("cp");
  if (needPta) {
    set.owned.push_back(makePointsTo(s));
    set.pta = set.owned.back().get();
    s.stabilizer().registerAnalysis(set.pta);
  }
  if (wants("rd")) {
    set.owned.push_back(makeReachingDefs(s, set.pta));
    set.rd = set.owned.back().get();
    s.stabilizer().registerAnalysis(set.rd);
  }
  if (wants("lv")) {
    set.owned.push_back(makeLiveness(s, set.pta));
    set.lv = set.owned.back().get();
    s.stabilizer().registerAnalysis(set.lv);
  }
  if (wants("cp")) {
    set.owned.push_back(makeCopyProp(s, set.pta));
    set.cp = set.owned.back().get();
    s.stabilizer().registerAnalysis(set.cp);
  }
  return set;
}

namespace {

std::string factsKey(const std::map<NodeId, std::pair<Facts, Facts>>& m) {
  std::string s;
  auto emit = [&s](const Facts& f) {
    if (!f) {
      s += "T";
      return;
    }
    for (const auto& [k, v] : *f) {
      s += k + "={";
      for (const std::string& x : v) s += x + ",";
      s += "}";
    }
  };
  for (const auto& [n, io] : m) {
    s += "n" + std::to_string(n) + "|";
    emit(io.first);
    s += "|";
    emit(io.second);
    s += "\n";
  }
  return s;
}

RunReport runOnce(const std::string& source, const RunConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  Program p = parse(source);
  Session session(std::move(p), cfg.mode, cfg.strictRp);
  AnalysisSet set = buildAnalyses(session, cfg.analyses);
  session.stabilizer().resetCounters();

  RunReport rep;
  rep.mode = modeName(cfg.mode);
  if (cfg.optimize) {
    if (!set.rd || !set.lv) {
      throw std::invalid_argument("barrier elimination needs the rd and lv analyses");
    }
    BarrElimContext ctx{session, *set.rd, *set.lv, {}, 10000};
    if (isRelevantPoint(cfg.mode)) {
      ctx.changePoint = [&session](const std::string&) { session.stabilizeNow(); };
    }
    rep.opt = runBarrElim(ctx);
  }
  session.stabilizeNow();

  std::string digestInput;
  for (Analysis* a : session.stabilizer().analyses()) {
    auto* d = dynamic_cast<DataflowAnalysis*>(a);
    digestInput += a->name() + "\n" + factsKey(d->snapshotFacts());
  }
  digestInput += session.phaseInfo().toJson();
  rep.optimizedSource = print(session.program());
  digestInput += rep.optimizedSource;
  rep.factsDigest = fnv1a(digestInput);

  for (Analysis* a : session.stabilizer().analyses()) {
    rep.counters[a->name()] = a->counters();
  }
  rep.total = session.stabilizer().totalCounters();
  rep.countersConsistent =
      rep.total.computeCalls + rep.total.handleUpdateCalls >= rep.total.stabilizationTriggers &&
      rep.total.transferApplications >= rep.total.nodesReprocessed;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace

RunReport runPipeline(const std::string& source, const RunConfig& cfg) {
  RunReport rep = runOnce(source, cfg);
  if (cfg.repeat > 1) {
    double logSum = std::log(std::max(rep.seconds, 1e-9));
    for (int i = 1; i < cfg.repeat; ++i) {
      RunReport r = runOnce(source, cfg);
      if (r.factsDigest != rep.factsDigest) {
        throw EngineFault("nondeterministic pipeline result across repeats");
      }
      logSum += std::log(std::max(r.seconds, 1e-9));
    }
    rep.seconds = std::exp(logSum / cfg.repeat);
  }
  return rep;
}

std::string verifyAnalysesExact(AnalysisSet& set) {
  for (auto& a : set.owned) {
    auto actual = a->snapshotFacts();
    auto expect = a->computeFullSnapshot();
    if (actual != expect) {
      for (const auto& [n, io] : expect) {
        auto it = actual.find(n);
        if (it == actual.end() || it->second != io) {
          return a->name() + " diverges at node " + std::to_string(n);
        }
      }
      return a->name() + " diverges (extra nodes)";
    }
  }
  return "";
}

static void countersToJson(nlohmann::json& j, const Counters& c) {
  j["stabilizationTriggers"] = c.stabilizationTriggers;
  j["computeCalls"] = c.computeCalls;
  j["handleUpdateCalls"] = c.handleUpdateCalls;
  j["nodesReprocessed"] = c.nodesReprocessed;
  j["transferApplications"] = c.transferApplications;
}

std::string RunReport::toJson() const {
  nlohmann::json j;
  j["mode"] = mode;
  j["opt"] = {{"barriersRemoved", opt.barriersRemoved},
              {"regionsMerged", opt.regionsMerged},
              {"callsInlined", opt.callsInlined},
              {"rounds", opt.rounds}};
  for (const auto& [name, c] : counters) countersToJson(j["counters"][name], c);
  countersToJson(j["total"], total);
  j["countersConsistent"] = countersConsistent;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(factsDigest));
  j["factsDigest"] = buf;
  j["seconds"] = seconds;
  j["optimizedSource"] = optimizedSource;
  return j.dump(2);
}

}  // namespace homeo
