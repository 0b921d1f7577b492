// podfed: run federated quad-pattern queries and summary experiments over a
// scenario of simulated personal data pods.
//
// Exit codes: 0 success, 1 experiment or assertion failure, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "podfed/experiments.hpp"
#include "podfed/federation.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  bool fixed_keys = false;
};

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("PODFED_SEED"); env && *env) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("PODFED_SEED is not an integer: ") + env);
    }
  }
  return flag;
}

std::unique_ptr<podfed::Federation> load(const std::string& path,
                                         const Common& common) {
  podfed::LoadOptions opts;
  opts.fixed_keys = common.fixed_keys;
  opts.seed = effective_seed(common.seed);
  return std::make_unique<podfed::Federation>(podfed::load_scenario_file(path),
                                              opts);
}

std::string describe(const podfed::Requester& who) {
  return who ? who->webid : std::string("anonymous");
}

int cmd_run(const std::string& scenario, const std::string& as,
            const std::string& pattern_text, bool parallel,
            const Common& common) {
  auto fed = load(scenario, common);
  podfed::Requester who;
  podfed::QuadPattern pattern;
  try {
    who = fed->requester(as);
    pattern = fed->parse_pattern(pattern_text);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  auto [result, report] = fed->query(who, pattern, {parallel});

  std::cout << "# as " << describe(who) << '\n'
            << "# pattern " << podfed::to_string(pattern) << '\n';
  for (const auto& row : result.rows) {
    std::string line = podfed::serialize_nquads({row.quad});
    line.pop_back();
    std::cout << line << "  # from " << row.source << '\n';
  }
  std::cout << "# results " << result.rows.size() << '\n'
            << "# sources " << report.candidates << " selected "
            << report.selected.size() << " pruned "
            << report.candidates - report.selected.size() << '\n'
            << "# pruned-by-global " << (report.pruned_by_global ? "yes" : "no")
            << '\n'
            << "# probes " << report.probes << '\n'
            << "# pod-queries " << result.queries_issued << '\n'
            << "# generation " << report.generation << '\n';
  for (const auto& u : report.selected) std::cout << "# selected " << u << '\n';
  for (const auto& [u, err] : result.failures)
    std::cout << "# failed " << u << ": " << err << '\n';
  return kOk;
}

int cmd_fpr(std::uint64_t m, std::uint32_t h, std::uint64_t inserts,
            std::uint64_t probes, std::uint64_t seed, double tolerance) {
  podfed::AmfParams params;
  params.m = m;
  params.h = h;
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto r = podfed::fpr_experiment(params, inserts, probes, effective_seed(seed));
  const bool ok = r.relative_deviation <= tolerance;
  std::cout << std::setprecision(6) << "m " << m << "\nh " << h << "\ninserts "
            << inserts << "\nprobes " << probes << "\nseed " << r.seed
            << "\npositives " << r.positives << "\nmeasured " << r.measured
            << "\nestimate " << r.estimate << "\nrelative-deviation "
            << r.relative_deviation << "\nresult " << (ok ? "pass" : "fail")
            << '\n';
  return ok ? kOk : kFailed;
}

int cmd_leak(const std::string& scenario, std::uint64_t probes,
             std::uint64_t seed, const Common& common) {
  auto fed = load(scenario, common);
  auto r = podfed::leakage_experiment(*fed, probes, effective_seed(seed));
  std::cout << std::setprecision(6) << "restricted-terms " << r.restricted_terms
            << "\nwrong-key-probes " << r.wrong_key_probes
            << "\nwrong-key-positives " << r.wrong_key_positives
            << "\npublic-probes " << r.public_probes << "\npublic-positives "
            << r.public_positives << "\npositive-rate " << r.positive_rate
            << "\nexpected-fpr " << r.expected_fpr << "\nbound " << r.bound
            << "\ncontrol-probes " << r.control_probes << "\ncontrol-misses "
            << r.control_misses << "\naggregator-bytes " << r.aggregator_bytes
            << "\nplaintext-absent " << (r.plaintext_absent ? "yes" : "no")
            << "\nresult " << (r.passed() ? "pass" : "fail") << '\n';
  return r.passed() ? kOk : kFailed;
}

int cmd_rotate(const std::string& scenario, const std::string& policy,
               const Common& common) {
  auto fed = load(scenario, common);
  podfed::RotationReport r;
  try {
    r = fed->rotate_key(policy);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::cout << "policy " << r.policy_id << "\nkey-changed "
            << (r.key_changed ? "yes" : "no") << "\ngeneration "
            << r.generation_before << " -> " << r.generation_after << '\n';
  for (const auto& u : r.rebuilt_files) std::cout << "rebuilt " << u << '\n';
  for (const auto& ni : fed->config().identities) {
    std::cout << "keyring " << ni.name << ' '
              << fed->keyring(ni.identity).keys.size() << '\n';
  }
  return r.key_changed ? kOk : kFailed;
}

int cmd_dump(const std::string& scenario, const std::string& file,
             const std::string& component, const std::string& out_path,
             const Common& common) {
  auto fed = load(scenario, common);
  std::vector<std::uint8_t> bytes;
  if (file == "aggregate") {
    auto snap = fed->aggregator().snapshot();
    bytes = podfed::serialize_aggregate(snap->summary, snap->sources);
  } else {
    podfed::Pod* pod = fed->pod_for_file(file);
    if (!pod) throw UsageError("no such file: " + file);
    podfed::FileSummary s = pod->get_file_summary(file);
    if (component.empty()) {
      bytes = podfed::serialize_file_summary(s);
    } else {
      std::optional<podfed::Component> which;
      for (auto c : podfed::kComponents)
        if (podfed::component_name(c) == component) which = c;
      if (!which) throw UsageError("unknown component: " + component);
      bytes = podfed::serialize_filter(s.at(*which));
    }
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + out_path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  std::cout << "wrote " << bytes.size() << " bytes to " << out_path << '\n';
  return out ? kOk : kFailed;
}

int cmd_replay(const std::string& scenario, const std::string& transcript,
               const Common& common) {
  auto fed = load(scenario, common);
  std::ifstream in(transcript);
  if (!in) throw UsageError("cannot open " + transcript);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::cout << podfed::replay_transcript(*fed, buf.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated quad-pattern queries over privacy-preserving summaries"};
  app.require_subcommand(1);
  Common common;

  std::string scenario;
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "Scenario document (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--fixed-keys", common.fixed_keys,
                  "Derive policy keys from the seed (debug only)");
    sub->add_option("--seed", common.seed, "Seed; PODFED_SEED overrides");
  };

  std::string as;
  std::string pattern;
  bool parallel = false;
  auto* run = app.add_subcommand("run", "Run a federated quad-pattern query");
  add_scenario(run);
  run->add_option("--as", as, "Identity name, webid or 'anonymous'")->required();
  run->add_option("--pattern", pattern, "Four pattern terms")->required();
  run->add_flag("--parallel", parallel, "Query selected sources concurrently");

  std::uint64_t m = 16384;
  std::uint32_t h = 11;
  std::uint64_t inserts = 500;
  std::uint64_t probes = 1000000;
  std::uint64_t fpr_seed = 42;
  double tolerance = 0.2;
  auto* fpr = app.add_subcommand("fpr", "Measure the false positive rate");
  fpr->set_help_flag("--help", "Print this help message and exit");
  fpr->add_option("--m", m, "Filter bits");
  fpr->add_option("--h", h, "Hash probes");
  fpr->add_option("--inserts", inserts, "Dual inserts");
  fpr->add_option("--probes", probes, "Non-member probes");
  fpr->add_option("--seed", fpr_seed, "Seed; PODFED_SEED overrides");
  fpr->add_option("--tolerance", tolerance, "Allowed relative deviation");

  std::uint64_t leak_probes = 100000;
  auto* leak = app.add_subcommand("leak", "Probe restricted terms with wrong keys");
  add_scenario(leak);
  leak->add_option("--probes", leak_probes, "Wrong-key probes");

  std::string policy;
  auto* rotate = app.add_subcommand("rotate-key", "Regenerate a policy key");
  add_scenario(rotate);
  rotate->add_option("--policy", policy, "Policy id")->required();

  std::string file;
  std::string component;
  std::string out_path;
  auto* dump = app.add_subcommand("dump-summary", "Write a summary in binary form");
  add_scenario(dump);
  dump->add_option("--file", file, "File URI, or 'aggregate' for PPAS")->required();
  dump->add_option("--component", component,
                   "Write one PPFS filter (subject|predicate|object|graph)");
  dump->add_option("--out", out_path, "Output path")->required();

  std::string transcript;
  auto* replay = app.add_subcommand("replay", "Replay a request transcript");
  add_scenario(replay);
  replay->add_option("--transcript", transcript, "Request lines")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(scenario, as, pattern, parallel, common);
    if (*fpr) return cmd_fpr(m, h, inserts, probes, fpr_seed, tolerance);
    if (*leak) return cmd_leak(scenario, leak_probes, common.seed, common);
    if (*rotate) return cmd_rotate(scenario, policy, common);
    if (*dump) return cmd_dump(scenario, file, component, out_path, common);
    if (*replay) return cmd_replay(scenario, transcript, common);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const podfed::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kUsage;
}
