// gxstpir_cli: capacity bounds, simulated sessions, guarantee checks, fixtures.
//
// Exit status: 0 success, 2 precondition violation, 3 guarantee violation,
// 4 I/O or parse error. JSON goes to stdout, a short summary to stderr.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gxstpir/gxstpir.hpp"

namespace {

using namespace gxstpir;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kPrecondition = 2;
constexpr int kViolation = 3;
constexpr int kIo = 4;

int exit_code_for(ErrorCode c) {
  return c == ErrorCode::Parse || c == ErrorCode::Io ? kIo : kPrecondition;
}

std::vector<int> parse_id_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      enforce(used == item.size(), ErrorCode::Parse, "bad server id '" + item + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, "bad server id '" + item + "'");
    }
  }
  return out;
}

std::vector<std::vector<int>> all_subsets(int n, int k) {
  std::vector<int> items;
  for (int i = 1; i <= n; ++i) items.push_back(i);
  std::vector<std::vector<int>> out;
  model::for_each_combination(items, static_cast<std::size_t>(k),
                              [&](const std::vector<int>& s) { out.push_back(s); });
  return out;
}

int cmd_capacity(const std::string& path, std::optional<int> x, std::optional<int> t,
                 int cap) {
  auto doc = json_io::load_pattern(path);
  const int xx = x.value_or(doc.x), tt = t.value_or(doc.t);
  const auto report = capacity::capacity_report(doc.pattern, xx, tt, cap);
  std::cout << json_io::capacity_to_json(report).dump(2) << '\n';
  std::cerr << "capacity: lower " << to_string(report.lower) << ", upper "
            << to_string(report.upper) << (report.matched ? " (matched)" : " (gap)")
            << ", lower via " << capacity::to_string(report.lower_method) << '\n';
  return kOk;
}

int cmd_simulate(const std::string& path, bool sequential, bool with_transcript) {
  auto config = simnet::load_session_config(path);
  if (sequential) config.threaded = false;
  const auto report = simnet::run_session(config);
  std::cout << simnet::report_to_json(report, with_transcript).dump(2) << '\n';
  std::cerr << "simulate: " << simnet::to_string(report.mode) << ", "
            << report.decoded.size() << " symbols from " << report.total_download
            << " downloads, rate " << to_string(report.rate) << ", "
            << (report.correct ? "correct" : "WRONG") << ", hash "
            << report.transcript_hash << '\n';
  return report.correct ? kOk : kViolation;
}

struct VerifyFlags {
  bool privacy = false;
  bool security = false;
  bool correctness = false;
  std::string colluders;
  std::uint64_t budget = verify::EnumerationBudget{}.max_states;
  int trials = 100;
};

int cmd_verify(const std::string& path, VerifyFlags f) {
  const auto config = simnet::load_session_config(path);
  if (!f.privacy && !f.security && !f.correctness) f.correctness = true;
  const auto inst = scheme::build_instance(config.pattern, config.x, config.t, config.q);
  const verify::EnumerationBudget budget{f.budget};
  std::optional<std::vector<int>> fixed;
  if (!f.colluders.empty()) fixed = parse_id_list(f.colluders);

  json out{{"params", simnet::instance_params(inst)}};
  bool ok = true;
  std::ostringstream summary;

  if (f.correctness) {
    verify::CorrectnessOptions opt;
    opt.trials = f.trials;
    opt.seed = config.seed;
    opt.compute = config.mode == simnet::Mode::Compute;
    const auto r = verify::verify_correctness(inst, opt);
    json fails = json::array();
    for (const auto& fl : r.failures)
      fails.push_back({{"trial", fl.trial}, {"tape_seed", fl.tape_seed}, {"demand", fl.demand},
                       {"decoded", simnet::values(fl.decoded)},
                       {"expected", simnet::values(fl.expected)}});
    out["correctness"] = {{"trials", r.trials}, {"passed", r.passed}, {"failures", fails}};
    ok = ok && r.ok();
    summary << "correctness " << r.passed << "/" << r.trials << "; ";
  }
  if (f.privacy) {
    json p;
    if (inst.t >= 1) {
      p["structural"] = verify::verify_privacy_structural(inst);
      ok = ok && p["structural"].get<bool>();
    } else {
      p["structural"] = nullptr;
    }
    json runs = json::array();
    const auto sets = fixed ? std::vector<std::vector<int>>{*fixed}
                            : all_subsets(inst.n_servers(), inst.t);
    bool all_private = true;
    for (const auto& s : sets) {
      const auto r = verify::verify_privacy_exhaustive(inst, s, budget);
      runs.push_back({{"colluders", r.colluders}, {"private", r.is_private},
                      {"states_per_demand", r.states_per_demand},
                      {"demands", r.demands.size()}});
      all_private = all_private && r.is_private;
    }
    p["exhaustive"] = runs;
    ok = ok && all_private;
    out["privacy"] = p;
    summary << "privacy " << (all_private ? "holds" : "VIOLATED") << " on " << sets.size()
            << " colluder sets; ";
  }
  if (f.security) {
    json runs = json::array();
    const auto sets = fixed ? std::vector<std::vector<int>>{*fixed}
                            : all_subsets(inst.n_servers(), inst.x);
    bool all_secure = true;
    for (const auto& s : sets) {
      const auto r = verify::verify_security_exhaustive(inst, s, budget, config.seed);
      runs.push_back({{"colluders", r.colluders}, {"secure", r.secure}, {"uniform", r.uniform},
                      {"partial_grid", r.partial_grid},
                      {"states_per_message", r.states_per_message},
                      {"message_realizations", r.message_realizations}});
      all_secure = all_secure && r.secure && r.uniform;
    }
    out["security"] = runs;
    ok = ok && all_secure;
    summary << "security " << (all_secure ? "holds" : "VIOLATED") << " on " << sets.size()
            << " colluder sets; ";
  }
  out["ok"] = ok;
  std::cout << out.dump(2) << '\n';
  std::cerr << "verify: " << summary.str() << (ok ? "ok" : "FAILED") << '\n';
  return ok ? kOk : kViolation;
}

int cmd_fixtures_regen(const std::string& dir) {
  const auto written = simnet::regenerate_fixtures(dir);
  json files = json::array();
  for (const auto& p : written) files.push_back(p.string());
  std::cout << json{{"written", files}}.dump(2) << '\n';
  std::cerr << "fixtures: wrote " << written.size() << " files to " << dir << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity bounds and simulated sessions for X-secure T-private retrieval "
               "over graph-based replicated storage"};
  app.require_subcommand(1);

  std::string pattern_path;
  std::optional<int> cap_x, cap_t;
  int elim_cap = capacity::kDefaultEliminationCap;
  auto* cap = app.add_subcommand("capacity", "Exact lower/upper capacity bounds of a pattern");
  cap->add_option("pattern", pattern_path, "pattern JSON file")->required();
  cap->add_option("--x", cap_x, "override X from the pattern document");
  cap->add_option("--t", cap_t, "override T from the pattern document");
  cap->add_option("--elimination-cap", elim_cap, "largest N for the subset search");

  std::string sim_path;
  bool sequential = false, with_transcript = false;
  auto* sim = app.add_subcommand("simulate", "Run one session with server actors");
  sim->add_option("config", sim_path, "session config JSON file")->required();
  sim->add_flag("--sequential", sequential, "single-threaded scheduler");
  sim->add_flag("--transcript", with_transcript, "include the full transcript");

  std::string ver_path;
  VerifyFlags vf;
  auto* ver = app.add_subcommand("verify", "Check correctness, T-privacy and X-security");
  ver->add_option("config", ver_path, "session config JSON file")->required();
  ver->add_flag("--privacy", vf.privacy, "exhaustive and structural T-privacy");
  ver->add_flag("--security", vf.security, "exhaustive X-security");
  ver->add_flag("--correctness", vf.correctness, "random end-to-end trials");
  ver->add_option("--colluders", vf.colluders, "comma separated server ids, e.g. 1,3");
  ver->add_option("--budget", vf.budget, "largest enumerated state count");
  ver->add_option("--trials", vf.trials, "correctness trials");

  std::string out_dir = "fixtures";
  auto* fix = app.add_subcommand("fixtures", "Fixture maintenance");
  fix->require_subcommand(1);
  auto* regen = fix->add_subcommand("regen", "Rewrite the canonical fixture files");
  regen->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kIo;
  }

  try {
    if (*cap) return cmd_capacity(pattern_path, cap_x, cap_t, elim_cap);
    if (*sim) return cmd_simulate(sim_path, sequential, with_transcript);
    if (*ver) return cmd_verify(ver_path, vf);
    if (*regen) return cmd_fixtures_regen(out_dir);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [Parse]: " << e.what() << '\n';
    return kIo;
  }
  return kPrecondition;
}
