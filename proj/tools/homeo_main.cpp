#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "homeo/corpus.hpp"
#include "homeo/interp.hpp"
#include "homeo/parser.hpp"
#include "homeo/pipeline.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmdRun(const std::string& input, const std::string& modeStr, bool strictRp,
           const std::string& opt, const std::string& analyses, int repeat,
           const std::string& reportPath) {
  homeo::RunConfig cfg;
  cfg.mode = homeo::modeFromString(modeStr);
  cfg.strictRp = strictRp;
  cfg.analyses = splitList(analyses);
  cfg.optimize = opt == "barrelim";
  cfg.repeat = repeat;
  homeo::RunReport rep = homeo::runPipeline(slurp(input), cfg);
  std::string json = rep.toJson();
  if (!reportPath.empty()) {
    std::ofstream out(reportPath);
    out << json << "\n";
  }
  std::cout << json << "\n";
  return 0;
}

int cmdGen(unsigned seed, int nodes, int pc, int barriers, const std::string& outDir) {
  homeo::GenConfig cfg{seed, nodes, pc, barriers};
  std::string src = homeo::generateSource(cfg);
  homeo::parse(src);  // self-check
  std::filesystem::create_directories(outDir);
  std::filesystem::path path =
      std::filesystem::path(outDir) / ("gen_" + std::to_string(seed) + ".hc");
  std::ofstream(path) << src;
  std::cout << path.string() << "\n";
  return 0;
}

int cmdFuzz(int trials, unsigned seed, const std::string& modeStr, int deltas) {
  std::vector<homeo::Mode> modes;
  if (modeStr == "all") {
    modes = homeo::allModes();
  } else {
    modes.push_back(homeo::modeFromString(modeStr));
  }
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    homeo::GenConfig gc{seed + static_cast<unsigned>(t), 60 + 10 * (t % 5), 2, 5};
    std::string src = homeo::generateSource(gc);
    for (homeo::Mode m : modes) {
      homeo::Session session(homeo::parse(src), m);
      homeo::AnalysisSet set = homeo::buildAnalyses(session, {"pta", "rd", "lv", "cp"});
      std::mt19937 rng(seed + static_cast<unsigned>(t) * 7919);
      for (int d = 0; d < deltas; ++d) {
        std::string label = homeo::randomDelta(session, rng);
        if (homeo::isRelevantPoint(m)) session.stabilizeNow();
        std::string err = homeo::verifyAnalysesExact(set);
        if (!err.empty()) {
          std::cout << "FAIL trial " << t << " mode " << homeo::modeName(m) << " delta "
                    << d << " (" << label << "): " << err << "\n";
          failures++;
          break;
        }
      }
    }
  }
  std::cout << "fuzz: " << trials << " trials x " << modes.size() << " modes, "
            << failures << " failures\n";
  return failures == 0 ? 0 : 2;
}

int cmdCompare(const std::string& input, const std::string& modesStr) {
  std::vector<homeo::Mode> modes;
  if (modesStr == "all") {
    modes = homeo::allModes();
  } else {
    for (const std::string& m : splitList(modesStr)) modes.push_back(homeo::modeFromString(m));
  }
  std::string src = slurp(input);
  std::optional<homeo::RunReport> first;
  bool agree = true;
  for (homeo::Mode m : modes) {
    homeo::RunConfig cfg;
    cfg.mode = m;
    homeo::RunReport rep = homeo::runPipeline(src, cfg);
    std::cout << rep.mode << " digest=" << std::hex << rep.factsDigest << std::dec
              << " transfers=" << rep.total.transferApplications
              << " removed=" << rep.opt.barriersRemoved << " merged=" << rep.opt.regionsMerged
              << " inlined=" << rep.opt.callsInlined << "\n";
    if (!first) {
      first = rep;
    } else if (rep.factsDigest != first->factsDigest ||
               rep.optimizedSource != first->optimizedSource) {
      agree = false;
    }
  }
  std::cout << (agree ? "modes agree" : "MODES DISAGREE") << "\n";
  return agree ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homeo: self-stabilizing analyses for a parallel mini-language"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "optimize one program and report metrics");
  std::string input, modeStr = "egupd", opt = "barrelim", analyses = "pta,rd,lv,cp";
  std::string reportPath;
  bool strictRp = false;
  int repeat = 1;
  run->add_option("input", input)->required();
  run->add_option("--mode", modeStr);
  run->add_flag("--strict-rp", strictRp);
  run->add_option("--opt", opt)->check(CLI::IsMember({"barrelim", "none"}));
  run->add_option("--analyses", analyses);
  run->add_option("--repeat", repeat)->check(CLI::PositiveNumber);
  run->add_option("--report", reportPath);

  auto* gen = app.add_subcommand("gen", "generate a corpus program");
  unsigned seed = 1;
  int nodes = 200, pc = 3, barriers = 8;
  std::string outDir = ".";
  gen->add_option("--seed", seed);
  gen->add_option("--nodes", nodes);
  gen->add_option("--pc", pc);
  gen->add_option("--barriers", barriers);
  gen->add_option("-o,--out", outDir);

  auto* fuzz = app.add_subcommand("fuzz", "freshness fuzzing across modes");
  int trials = 10, deltas = 30;
  std::string fuzzMode = "all";
  fuzz->add_option("--trials", trials);
  fuzz->add_option("--seed", seed);
  fuzz->add_option("--mode", fuzzMode);
  fuzz->add_option("--deltas", deltas);

  auto* cmp = app.add_subcommand("compare", "run all modes and compare results");
  std::string modesStr = "all";
  cmp->add_option("input", input)->required();
  cmp->add_option("--modes", modesStr);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmdRun(input, modeStr, strictRp, opt, analyses, repeat, reportPath);
    if (gen->parsed()) return cmdGen(seed, nodes, pc, barriers, outDir);
    if (fuzz->parsed()) return cmdFuzz(trials, seed, fuzzMode, deltas);
    if (cmp->parsed()) return cmdCompare(input, modesStr);
  } catch (const homeo::ParseError& e) {
    std::cerr << "parse error at " << e.line << ":" << e.col << ": " << e.what() << "\n";
    return 1;
  } catch (const homeo::StrictRpViolation& e) {
    std::cerr << "strict change-point violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
