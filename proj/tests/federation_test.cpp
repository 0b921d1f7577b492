#include "podfed/federation.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "json.hpp"
#include "podfed/experiments.hpp"
#include "support/oracles.hpp"

namespace podfed {
namespace {

using namespace podfed::testing;
using nlohmann::json;

json addressbook_json() {
  std::ifstream in(scenario_path());
  return json::parse(in);
}

std::string error_path(const json& doc) {
  try {
    parse_scenario(doc.dump());
  } catch (const ScenarioError& e) {
    return e.path();
  }
  return "<accepted>";
}

TEST(ParseScenario, Addressbook) {
  ScenarioConfig cfg = load_scenario_file(scenario_path());
  EXPECT_EQ(cfg.params.m, 131072u);
  EXPECT_EQ(cfg.params.h, 11u);
  EXPECT_EQ(cfg.identities.size(), 4u);
  ASSERT_EQ(cfg.pods.size(), 3u);
  EXPECT_EQ(cfg.pods[1].config.policies.size(), 2u);
  std::map<std::string, Tier> tiers;
  for (const auto& pod : cfg.pods)
    for (const auto& p : pod.config.policies) tiers[p.id] = p.subject.tier;
  EXPECT_EQ(tiers, (std::map<std::string, Tier>{{"contacts-public", Tier::kEveryone},
                                                {"r1", Tier::kEveryone},
                                                {"r2", Tier::kFriends},
                                                {"r3", Tier::kEveryone},
                                                {"r4", Tier::kAcquaintances},
                                                {"r5", Tier::kFriends}}));
  EXPECT_EQ(cfg.pods[2].config.groups.acquaintances,
            std::set<std::string>{kAliceMe});
  EXPECT_EQ(cfg.sources,
            (SourceList{kBobProfile, kCarolProfile, kAliceContacts}));
  EXPECT_EQ(cfg.prefixes.at("x"), kVocab);
}

TEST(ParseScenario, ValidationReportsFieldPaths) {
  struct Case {
    const char* name;
    std::function<void(json&)> edit;
    std::string path;
  };
  std::vector<Case> cases{
      {"friend not acquaintance",
       [](json& d) { d["pods"][2]["groups"]["friends"].push_back(kDaveMe); },
       "pods[2].groups.friends"},
      {"unknown tier", [](json& d) { d["pods"][1]["policies"][0]["tier"] = "family"; },
       "pods[1].policies[0].tier"},
      {"unknown effect", [](json& d) { d["pods"][1]["policies"][1]["effect"] = "maybe"; },
       "pods[1].policies[1].effect"},
      {"policy on foreign file",
       [](json& d) { d["pods"][1]["policies"][0]["file"] = kCarolProfile; },
       "pods[1].policies[0].file"},
      {"duplicate policy id in pod",
       [](json& d) { d["pods"][1]["policies"][1]["id"] = "r1"; },
       "pods[1].policies[1].id"},
      {"policy id reused across pods",
       [](json& d) { d["pods"][2]["policies"][0]["id"] = "r1"; },
       "pods[2].policies[0].id"},
      {"duplicate pod id", [](json& d) { d["pods"][2]["id"] = "bob"; }, "pods[2].id"},
      {"undeclared source",
       [](json& d) { d["aggregator"]["sources"].push_back("https://x.example/f"); },
       "aggregator.sources[3]"},
      {"reserved identity name",
       [](json& d) { d["identities"][3]["name"] = "anonymous"; }, "identities[3].name"},
      {"duplicate webid",
       [](json& d) { d["identities"][3]["webid"] = kAliceMe; }, "identities[3].webid"},
      {"missing owner", [](json& d) { d["pods"][0].erase("owner"); }, "pods[0].owner"},
      {"bad nquads",
       [](json& d) { d["pods"][0]["files"][0]["nquads"] = "<broken"; },
       "pods[0].files[0].nquads"},
      {"zero m", [](json& d) { d["params"]["m"] = 0; }, "params"},
      {"bad strategy", [](json& d) { d["conflict_strategy"] = "first"; }, "conflict_strategy"},
  };
  for (const auto& c : cases) {
    json doc = addressbook_json();
    c.edit(doc);
    EXPECT_EQ(error_path(doc), c.path) << c.name;
  }
  EXPECT_EQ(error_path(addressbook_json()), "<accepted>");
  EXPECT_THROW(parse_scenario("{not json"), ScenarioError);
  EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), ScenarioError);
}

TEST(Federation, ZeroPods) {
  Federation fed(parse_scenario(R"({"params": {"m": 1024, "h": 3}})"));
  EXPECT_TRUE(fed.pods().empty());
  EXPECT_TRUE(fed.aggregator().get_sources().empty());
  auto [r, report] = fed.query(std::nullopt, QuadPattern::all_variables());
  EXPECT_TRUE(r.rows.empty());
  EXPECT_EQ(r.queries_issued, 0u);
}

TEST(Federation, Requesters) {
  Federation fed(load_scenario_file(scenario_path()));
  EXPECT_FALSE(fed.requester("anonymous").has_value());
  EXPECT_EQ(fed.requester("bob")->webid, kBobMe);
  EXPECT_EQ(fed.requester(kCarolMe)->token, "carol-secret");
  EXPECT_THROW(fed.requester("mallory"), UnknownIdentity);
}

TEST(Federation, PrefixedPatterns) {
  Federation fed(load_scenario_file(scenario_path()));
  auto expected = predicate_pattern("email");
  EXPECT_EQ(to_string(fed.parse_pattern("?s <x:email> ?o ?g")), to_string(expected));
  EXPECT_EQ(to_string(fed.parse_pattern("?s x:email ?o ?g")), to_string(expected));
  EXPECT_EQ(to_string(fed.parse_pattern("?s <urn:podfed:vocab#email> ?o ?g")),
            to_string(expected));
}

TEST(Federation, ScenarioSpotValues) {
  Federation fed(load_scenario_file(scenario_path()));
  auto run = [&](const char* who, const char* pred) {
    return fed.query(fed.requester(who), predicate_pattern(pred));
  };
  auto [alice_email, r1] = run("alice", "email");
  EXPECT_EQ(alice_email.rows.size(), 2u);
  EXPECT_EQ(alice_email.queries_issued, 2u);
  auto [dave_email, r2] = run("dave", "email");
  ASSERT_EQ(dave_email.rows.size(), 1u);
  EXPECT_EQ(dave_email.rows[0].quad.object, Term::literal("bob@bob.pods.org"));
  auto [alice_tel, r3] = run("alice", "telephone");
  ASSERT_EQ(alice_tel.rows.size(), 1u);
  EXPECT_EQ(alice_tel.rows[0].source, kBobProfile);
  auto [dave_tel, r4] = run("dave", "telephone");
  EXPECT_TRUE(dave_tel.rows.empty());
  EXPECT_EQ(dave_tel.queries_issued, 0u);
  EXPECT_TRUE(r4.pruned_by_global);
}

TEST(Federation, UpdatesPropagateToAggregator) {
  Federation fed(load_scenario_file(scenario_path()), {true, 1});
  auto before = fed.aggregator().snapshot()->summary.generation;
  fed.pod("bob").update_file_text(
      kBobProfile,
      "<https://bob.pods.org/profile#me> <urn:podfed:vocab#email> \"new@bob.pods.org\" .\n");
  EXPECT_EQ(fed.aggregator().snapshot()->summary.generation, before + 1);
  auto [r, _] = fed.query(fed.requester("dave"), fed.parse_pattern("?s x:email \"new@bob.pods.org\" ?g"));
  EXPECT_EQ(r.rows.size(), 1u);
  auto [tel, report] = fed.query(fed.requester("alice"), predicate_pattern("telephone"));
  EXPECT_TRUE(tel.rows.empty());
  EXPECT_TRUE(report.pruned_by_global);
}

TEST(RotateKey, ChangesKeyAndRebuilds) {
  Federation fed(load_scenario_file(scenario_path()), {true, 4});
  auto alice = fed.requester("alice");
  KeyRing before = fed.keyring(alice);
  auto r = fed.rotate_key("r2");
  EXPECT_TRUE(r.key_changed);
  EXPECT_EQ(r.rebuilt_files, std::vector<std::string>{kBobProfile});
  EXPECT_EQ(r.generation_after, r.generation_before + 1);
  KeyRing after = fed.keyring(alice);
  EXPECT_NE(before.keys, after.keys);
  EXPECT_EQ(before.keys.size(), after.keys.size());

  // The old key no longer matches; the new one does.
  auto snap = fed.aggregator().snapshot();
  const auto& pred = snap->summary.at(Component::kPredicate);
  std::vector<AccessKey> dropped;
  std::set_difference(before.keys.begin(), before.keys.end(), after.keys.begin(),
                      after.keys.end(), std::back_inserter(dropped));
  ASSERT_EQ(dropped.size(), 1u);
  EXPECT_FALSE(pred.contains(vocab("telephone"), dropped[0], kBobProfile));
  EXPECT_EQ(fed.query(alice, predicate_pattern("telephone")).first.rows.size(), 1u);

  EXPECT_THROW(fed.rotate_key("nope"), std::invalid_argument);
}

TEST(RotateKey, PublicPolicyKeyDoesNotChange) {
  Federation fed(load_scenario_file(scenario_path()), {true, 4});
  EXPECT_FALSE(fed.rotate_key("r1").key_changed);
}

TEST(ReplayTranscript, Responses) {
  Federation fed(load_scenario_file(scenario_path()));
  std::string out = replay_transcript(
      fed,
      "# comment\n"
      "alice-secret https://bob.pods.org/profile ?s x:telephone ?o ?g\n"
      "- https://carol.pods.org/profile ?s x:email ?o ?g\n"
      "forged https://bob.pods.org/profile ?s ?p ?o ?g\n"
      "- https://bob.pods.org/missing ?s ?p ?o ?g\n"
      "- https://bob.pods.org/profile ?s ?p\n");
  const std::string expected =
      "# 1 ok 1\n"
      "<https://bob.pods.org/profile#me> <urn:podfed:vocab#telephone> "
      "\"+32 9 111 11 11\" <urn:podfed:default-graph> .\n"
      "# 2 ok 0\n"
      "# 3 ok 0\n"
      "# 4 not-found\n"
      "# 5 error ";
  EXPECT_EQ(out.substr(0, expected.size()), expected) << out;
}

TEST(Experiments, FprIsDeterministicPerSeed) {
  AmfParams p;
  p.m = 4096;
  p.h = 5;
  auto a = fpr_experiment(p, 200, 20000, 7);
  auto b = fpr_experiment(p, 200, 20000, 7);
  EXPECT_EQ(a.positives, b.positives);
  EXPECT_DOUBLE_EQ(a.estimate, false_positive_estimate(p, 200));
  auto empty = fpr_experiment(p, 0, 1000, 7);
  EXPECT_EQ(empty.positives, 0u);
  EXPECT_EQ(empty.relative_deviation, 0.0);
}

TEST(Experiments, LeakageOnAddressbook) {
  Federation fed(load_scenario_file(scenario_path()));
  auto r = leakage_experiment(fed, 100000, 11);
  EXPECT_GT(r.restricted_terms, 0u);
  EXPECT_GE(r.wrong_key_probes, 100000u);
  EXPECT_LE(r.positive_rate, r.bound);
  EXPECT_EQ(r.control_misses, 0u);
  EXPECT_GT(r.control_probes, 0u);
  EXPECT_TRUE(r.plaintext_absent);
  EXPECT_GT(r.aggregator_bytes, 0u);
  EXPECT_TRUE(r.passed());
}

TEST(Experiments, LeakageWithNothingRestricted) {
  json doc = addressbook_json();
  for (auto& pod : doc["pods"])
    for (auto& p : pod["policies"]) p["tier"] = "everyone";
  Federation fed(parse_scenario(doc.dump()));
  auto r = leakage_experiment(fed, 1000, 1);
  EXPECT_EQ(r.restricted_terms, 0u);
  EXPECT_EQ(r.wrong_key_positives, 0u);
  EXPECT_TRUE(r.passed());
}

}  // namespace
}  // namespace podfed
