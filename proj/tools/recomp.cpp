// recomp — context equation tools: solve / oracle / verify / compress / gen.
//
// Exit codes: 0 SAT (or success), 1 UNSAT (or FAIL), 2 UNKNOWN,
// 64 usage, 65 bad input file, 66 unreadable input, 70 internal error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "recomp/compress.hpp"
#include "recomp/oracle.hpp"
#include "recomp/problem.hpp"
#include "recomp/solver.hpp"
#include "recomp/text.hpp"

namespace {

constexpr int kExitUnknown = 2;
constexpr int kExitUsage = 64;
constexpr int kExitBadInput = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitInternal = 70;

struct NoInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string readInput(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NoInput("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> readLines(const std::string& path) {
  std::istringstream in(readInput(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

struct SolveArgs {
  std::string file = "-";
  recomp::Limits limits;
  std::string traceFile, replayFile;
  bool emitGrammar = false;
};

int runSolve(const SolveArgs& a) {
  recomp::Equation eq = recomp::parseProblem(readInput(a.file));
  recomp::Verdict v = a.replayFile.empty()
                          ? recomp::solve(eq, a.limits)
                          : recomp::replaySolve(eq, a.limits, readLines(a.replayFile));
  switch (v.outcome) {
    case recomp::Outcome::Sat: {
      const recomp::SatCertificate& cert = *v.certificate;
      std::cout << "SAT\n" << recomp::printSubstitutionLines(eq, cert.substitution);
      if (!a.traceFile.empty()) {
        std::ofstream out(a.traceFile, std::ios::binary);
        if (!out) throw NoInput("cannot write '" + a.traceFile + "'");
        for (const std::string& ln : cert.trace) out << ln << "\n";
      }
      if (a.emitGrammar) {
        std::cout << "grammar:\n";
        for (const recomp::CompressionEvent& ev : cert.grammar.events)
          std::cout << recomp::formatEvent(ev, cert.finalSig) << "\n";
        for (const auto& [cv, img] : cert.grammarImages.cvarImages)
          std::cout << eq.cvars.name(cv) << " := "
                    << recomp::printTerm(img, cert.finalSig, eq.vars, eq.cvars) << "\n";
        for (const auto& [var, img] : cert.grammarImages.varImages)
          std::cout << eq.vars.name(var) << " := "
                    << recomp::printTerm(img, cert.finalSig, eq.vars, eq.cvars) << "\n";
      }
      return 0;
    }
    case recomp::Outcome::Unsat:
      std::cout << "UNSAT\n";
      return 1;
    case recomp::Outcome::Unknown:
    default:
      std::cout << "UNKNOWN " << v.limitFired << "\n";
      return kExitUnknown;
  }
}

struct OracleArgs {
  std::string file = "-";
  recomp::EnumBounds bounds;
};

int runOracle(const OracleArgs& a) {
  recomp::Equation eq = recomp::parseProblem(readInput(a.file));
  recomp::OracleOutcome o = recomp::oracleSolve(eq, a.bounds);
  if (o.solution) {
    std::cout << "SAT " << o.solution->size << "\n"
              << recomp::printSubstitutionLines(eq, o.solution->substitution);
    return 0;
  }
  std::cout << "BOUNDED-UNSAT " << o.bounds.maxSolutionSize << "\n";
  return 1;
}

int runVerify(const std::string& problemFile, const std::string& substFile) {
  recomp::Equation eq = recomp::parseProblem(readInput(problemFile));
  recomp::SubstitutionFile sf =
      recomp::parseSubstitutionFile(readInput(substFile), eq);
  bool ok = true;
  for (const auto& [v, n] : recomp::varOccurrences(eq)) {
    (void)n;
    if (!sf.substitution.definesVar(v)) {
      std::cerr << "missing image for " << eq.vars.name(v) << "\n";
      ok = false;
    }
  }
  for (const auto& [cv, n] : recomp::cvarOccurrences(eq)) {
    (void)n;
    if (!sf.substitution.definesCVar(cv)) {
      std::cerr << "missing image for " << eq.cvars.name(cv) << "\n";
      ok = false;
    }
  }
  ok = ok && recomp::verifyCertificate(eq, sf.substitution, sf.declaredEmpty);
  std::cout << (ok ? "OK" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

int runCompress(const std::string& file) {
  recomp::Signature sig;
  recomp::Term t = recomp::parseGroundTerm(readInput(file), sig);
  recomp::CompressionLog log(sig);
  recomp::Term c = recomp::compressTree(t, sig, log);
  recomp::NamePool vars{"v"}, cvars{"C"};
  std::cout << recomp::printTerm(c, sig, vars, cvars) << "\n";
  for (const recomp::CompressionEvent& ev : log.events)
    std::cout << recomp::formatEvent(ev, sig) << "\n";
  return 0;
}

int runGen(const std::string& dir, std::uint64_t seed, int count) {
  recomp::CorpusParams params;
  params.seed = seed;
  params.count = count;
  std::vector<recomp::CorpusItem> items = recomp::generateCorpus(params);
  std::filesystem::create_directories(dir);
  for (const recomp::CorpusItem& it : items) {
    std::ofstream out(std::filesystem::path(dir) / it.name, std::ios::binary);
    if (!out) throw NoInput("cannot write '" + (std::filesystem::path(dir) / it.name).string() + "'");
    out << it.text;
  }
  std::cout << "wrote " << items.size() << " files to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context equation satisfiability via recompression"};
  app.require_subcommand(1);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "decide an equation, print SAT/UNSAT/UNKNOWN");
  solve->add_option("file", sa.file, "problem file, - for stdin");
  solve->add_option("--max-phases", sa.limits.maxPhases, "phase budget per branch");
  solve->add_option("--max-eq-size", sa.limits.maxEquationSize,
                    "equation size cutoff (0 = scaled default)");
  solve->add_option("--exp-cap", sa.limits.exponentCap, "exponent-of-periodicity cap");
  solve->add_option("--max-nodes", sa.limits.maxNodes, "search node budget");
  solve->add_option("--seed", sa.limits.randomSeed, "seed for sampled partitions");
  solve->add_option("--trace", sa.traceFile, "FILE: write the successful branch's trace");
  solve->add_option("--replay", sa.replayFile, "FILE: re-run a recorded trace instead of searching");
  solve->add_flag("--emit-grammar", sa.emitGrammar, "print the compressed solution grammar");

  OracleArgs oa;
  CLI::App* oracle = app.add_subcommand("oracle", "brute-force enumeration ground truth");
  oracle->add_option("file", oa.file, "problem file, - for stdin");
  oracle->add_option("--max-solution", oa.bounds.maxSolutionSize,
                     "bound on substituted lhs size");
  oracle->add_option("--max-image", oa.bounds.maxPerImageSize, "bound per image size");

  std::string vProblem, vSubst;
  CLI::App* verify = app.add_subcommand("verify", "check a substitution against a problem");
  verify->add_option("problem", vProblem, "problem file, - for stdin")->required();
  verify->add_option("substitution", vSubst, "substitution file, - for stdin")->required();

  std::string cFile = "-";
  CLI::App* compress = app.add_subcommand("compress", "one compression round on a ground term");
  compress->add_option("file", cFile, "term file, - for stdin");

  std::string gDir;
  std::uint64_t gSeed = 1;
  int gCount = 500;
  CLI::App* gen = app.add_subcommand("gen", "write a seeded problem corpus");
  gen->add_option("--dir", gDir, "output directory")->required();
  gen->add_option("--seed", gSeed, "corpus seed");
  gen->add_option("--count", gCount, "number of files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return runSolve(sa);
    if (oracle->parsed()) return runOracle(oa);
    if (verify->parsed()) {
      if (vProblem == "-" && vSubst == "-") {
        std::cerr << "only one input may come from stdin\n";
        return kExitUsage;
      }
      return runVerify(vProblem, vSubst);
    }
    if (compress->parsed()) return runCompress(cFile);
    if (gen->parsed()) return runGen(gDir, gSeed, gCount);
  } catch (const NoInput& e) {
    std::cerr << e.what() << "\n";
    return kExitNoInput;
  } catch (const recomp::SyntaxError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const recomp::ArityMismatch& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const recomp::DuplicateName& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const recomp::NoConstant& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const recomp::InconsistentGuess& e) {
    std::cerr << "replay error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const recomp::UnknownLetter& e) {
    std::cerr << "replay error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const recomp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;  // unreachable: a subcommand is required
}
