#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "gloss/error.hpp"
#include "gloss/gateway.hpp"
#include "gloss/prompts.hpp"
#include "httplib.h"
#include "support/fixtures.hpp"

using namespace gloss;

namespace {

template <class F>
Error caught(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected gloss::Error";
  return Error(Errc::IoFailure, "none");
}

std::vector<IntentCandidate> candidates_of(const NarrativeGraph& g, const char* node) {
  std::vector<IntentCandidate> out;
  for (const auto& e : outgoing_edges(g, NodeId(node))) out.push_back({e.id, e.intent});
  return out;
}

IntentCandidate candidate(const char* id, std::vector<std::string> examples, std::string label = "l",
                          std::string description = "") {
  return {EdgeId(id), ResponseIntent{std::move(label), std::move(description), std::move(examples)}};
}

// Local chat-completions stand-in. Handlers are swapped per test.
class FakeChatServer {
 public:
  FakeChatServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      handler(req, res, hits.load());
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeChatServer() {
    server_.stop();
    thread_.join();
  }
  ProviderConfig config() const {
    ProviderConfig c;
    c.kind = ProviderKind::RemoteChatCompletion;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.api_key = "test-key";
    c.model = "test-model";
    c.timeout = std::chrono::milliseconds(2000);
    c.backoff = std::chrono::milliseconds(5);
    return c;
  }
  static std::string reply(const std::string& content) {
    return Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
  }

  std::function<void(const httplib::Request&, httplib::Response&, int)> handler =
      [](const httplib::Request&, httplib::Response& res, int) { res.set_content(reply("ok"), "application/json"); };
  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

// --- Jaccard ------------------------------------------------------------------

TEST(MockScoring, WorkedExampleIsFourNinths) {
  const auto a = mock::word_set("I am so sorry about the wait");
  const auto b = mock::word_set("I am sorry for the inconvenience");
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(b.size(), 6u);
  EXPECT_DOUBLE_EQ(mock::jaccard(a, b), 4.0 / 9.0);
  EXPECT_DOUBLE_EQ(fx::oracle_jaccard("I am so sorry about the wait", "I am sorry for the inconvenience"), 4.0 / 9.0);
}

TEST(MockScoring, WorkedExampleThroughClassify) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto matches = classify_intent(mock, "I am so sorry about the wait", candidates_of(g, "n0"));
  ASSERT_EQ(matches.size(), 3u);
  EXPECT_EQ(matches[0].edge_id, EdgeId("e1"));
  EXPECT_EQ(matches[0].confidence, 4.0 / 9.0);
  EXPECT_NEAR(matches[0].confidence, 0.444, 0.0005);
}

TEST(MockScoring, IdentityAndDisjoint) {
  MockProvider mock;
  auto g = fx::customer_service();
  auto same = classify_intent(mock, "Stop yelling at me", candidates_of(g, "n0"));
  EXPECT_EQ(same[0].edge_id, EdgeId("e2"));
  EXPECT_EQ(same[0].confidence, 1.0);
  auto none = classify_intent(mock, "zxqv", candidates_of(g, "n0"));
  for (const auto& m : none) EXPECT_EQ(m.confidence, 0.0);
  EXPECT_EQ(none[0].edge_id, EdgeId("e1"));  // all tied: candidate order kept
}

TEST(MockScoring, NormalizationRules) {
  EXPECT_EQ(mock::word_set("Hello, WORLD!  hello"), (std::set<std::string>{"hello", "world"}));
  EXPECT_EQ(mock::word_set("don't"), (std::set<std::string>{"dont"}));
  EXPECT_EQ(mock::word_set("Café CAFÉ"), (std::set<std::string>{"café", "cafÉ"}));
  EXPECT_TRUE(mock::word_set(" ... ").empty());
  EXPECT_EQ(mock::jaccard({}, {}), 0.0);
}

TEST(MockScoring, NoExamplesFallsBackToLabelAndDescription) {
  EXPECT_DOUBLE_EQ(mock::intent_score("stay calm", {}, "calm", "stay polite"), 2.0 / 3.0);
}

TEST(MockScoring, AgreesWithOracleOnFuzzCorpus) {
  std::mt19937 rng(2024);
  MockProvider mock;
  for (int i = 0; i < 10'000; ++i) {
    const auto utterance = fx::random_text(rng, true, 0);
    std::vector<std::string> examples;
    for (int k = static_cast<int>(rng() % 4); k > 0; --k) examples.push_back(fx::random_text(rng, true, 0));
    const std::string label = "lbl" + std::to_string(rng() % 3);
    const std::string description = rng() % 2 ? fx::random_text(rng, true) : "";
    double expected = 0.0;
    if (examples.empty()) {
      expected = fx::oracle_jaccard(utterance, label + " " + description);
    } else {
      for (const auto& ex : examples) expected = std::max(expected, fx::oracle_jaccard(utterance, ex));
    }
    auto matches = classify_intent(mock, utterance, {candidate("e", examples, label, description)});
    ASSERT_EQ(matches[0].confidence, expected) << "pair " << i << ": '" << utterance << "'";
  }
}

// --- classify_intent ------------------------------------------------------------

TEST(Classify, EmptyCandidates) {
  MockProvider mock;
  EXPECT_EQ(caught([&] { classify_intent(mock, "x", {}); }).code(), Errc::EmptyCandidates);
}

TEST(Classify, ShapeAndTieOrder) {
  MockProvider mock;
  std::vector<IntentCandidate> cands = {candidate("a", {"red blue"}), candidate("b", {"blue green"}),
                                        candidate("c", {"red blue"}), candidate("d", {"zzz"})};
  auto m = classify_intent(mock, "red blue", cands);
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m[0].edge_id, EdgeId("a"));
  EXPECT_EQ(m[1].edge_id, EdgeId("c"));
  EXPECT_EQ(m[2].edge_id, EdgeId("b"));
  EXPECT_EQ(m[3].edge_id, EdgeId("d"));
}

TEST(Classify, RemoteScoresAreClampedAndFilled) {
  fx::ScriptedProvider p({R"(Sure! {"matches":[{"edge_id":"a","confidence":1.7},{"edge_id":"b","confidence":-2},
                           {"edge_id":"zz","confidence":0.9}]})"});
  auto m = classify_intent(p, "x", {candidate("a", {}), candidate("b", {}), candidate("c", {})});
  EXPECT_EQ(m[0], (IntentMatch{EdgeId("a"), 1.0}));
  EXPECT_EQ(m[1], (IntentMatch{EdgeId("b"), 0.0}));
  EXPECT_EQ(m[2], (IntentMatch{EdgeId("c"), 0.0}));
  EXPECT_EQ(p.requests[0].expects, Expectation::StructuredJson);
  EXPECT_EQ(p.requests[0].task, PromptTask::Classify);
}

TEST(Classify, MalformedAfterOneRepair) {
  fx::ScriptedProvider p({"nope", R"({"matches":[{"edge_id":"a","confidence":"high"}]})"});
  EXPECT_EQ(caught([&] { classify_intent(p, "x", {candidate("a", {})}); }).code(), Errc::MalformedClassification);
  EXPECT_EQ(p.requests.size(), 2u);
  EXPECT_EQ(p.requests[1].follow_up.at(0).role, "assistant");
  EXPECT_EQ(p.requests[1].follow_up.at(1).role, "user");

  fx::ScriptedProvider fixed({"nope", R"({"matches":[{"edge_id":"a","confidence":0.25}]})"});
  EXPECT_EQ(classify_intent(fixed, "x", {candidate("a", {})})[0].confidence, 0.25);
}

TEST(Classify, TransportErrorsPropagate) {
  fx::ScriptedProvider p({"{}"});
  p.fail_with = Errc::ProviderTimeout;
  EXPECT_EQ(caught([&] { classify_intent(p, "x", {candidate("a", {})}); }).code(), Errc::ProviderTimeout);
}

// --- propose_branch -------------------------------------------------------------

TEST(Branch, MockContract) {
  MockProvider mock;
  SceneNode scene{NodeId("n0"), "hi", "", false, Provenance::Authored};
  auto p = propose_branch(mock, scene, "whatever", {"patient"});
  EXPECT_EQ(p.intent_label, "gen-001");
  EXPECT_EQ(p.avatar_reply, "Mock reply to: whatever");
  EXPECT_EQ(p.scene_description, "Auto branch");
  EXPECT_FALSE(p.terminal);
  EXPECT_EQ(propose_branch(mock, scene, "whatever", {"patient", "GEN-001"}).intent_label, "gen-002");
  EXPECT_EQ(propose_branch(mock, scene, "whatever", {"patient"}), p);
  EXPECT_EQ(caught([&] { propose_branch(mock, scene, "  ", {}); }).code(), Errc::EmptyUtterance);
}

TEST(Branch, CollisionRule) {
  EXPECT_EQ(resolve_label_collision("patient", {"rude"}), "patient");
  EXPECT_EQ(resolve_label_collision("patient", {"Patient"}), "gen-patient");
  EXPECT_EQ(resolve_label_collision("patient", {"patient", "gen-patient"}), "gen-patient-2");
  EXPECT_EQ(resolve_label_collision("patient", {"patient", "gen-patient", "GEN-PATIENT-2"}), "gen-patient-3");

  fx::ScriptedProvider p({R"({"intent_label":"patient","avatar_reply":"Fine."})"});
  SceneNode scene{NodeId("n0"), "hi", "", false, Provenance::Authored};
  auto prop = propose_branch(p, scene, "please wait", {"patient", "rude"});
  EXPECT_EQ(prop.intent_label, "gen-patient");
  EXPECT_EQ(prop.avatar_reply, "Fine.");
}

TEST(Branch, MalformedGeneration) {
  fx::ScriptedProvider p({R"({"intent_label":"","avatar_reply":"x"})"});
  SceneNode scene{NodeId("n0"), "hi", "", false, Provenance::Authored};
  EXPECT_EQ(caught([&] { propose_branch(p, scene, "u", {}); }).code(), Errc::MalformedGeneration);
}

// --- compose_feedback ------------------------------------------------------------

TEST(Feedback, MockTemplate) {
  MockProvider mock;
  SceneNode scene{NodeId("n0"), "hi", "", false, Provenance::Authored};
  EXPECT_EQ(compose_feedback(mock, scene, "u", decision::Matched{EdgeId("e1"), 1.0, "patient"}),
            "Mock feedback for intent patient");
  EXPECT_EQ(compose_feedback(mock, scene, "u", decision::Rejected{0.1, "patient, rude"}),
            "Mock feedback for intent <none>");
  EXPECT_EQ(compose_feedback(mock, scene, "u", decision::GeneratedBranch{EdgeId("g"), NodeId("h"), "gen-001"}),
            "Mock feedback for intent gen-001");
}

TEST(Feedback, PromptIsIndependentOfClassification) {
  fx::ScriptedProvider p({"Nice work."});
  SceneNode scene{NodeId("n0"), "Where is my order?", "angry", false, Provenance::Authored};
  EXPECT_EQ(compose_feedback(p, scene, "sorry", decision::Rejected{0.2, "patient, rude, ignore"}), "Nice work.");
  const auto& req = p.requests.at(0);
  EXPECT_EQ(req.task, PromptTask::Feedback);
  EXPECT_EQ(req.expects, Expectation::FreeText);
  std::set<std::string> keys;
  for (const auto& [k, v] : req.variables) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"decision_kind", "decision_label", "scene_avatar", "scene_description",
                                         "utterance"}));
  EXPECT_EQ(req.user_text.find("patient"), std::string::npos);
  EXPECT_EQ(req.user_text.find("candidates"), std::string::npos);
  EXPECT_TRUE(req.follow_up.empty());
}

TEST(Feedback, EmptyTextIsAProviderError) {
  fx::ScriptedProvider p({"   "});
  SceneNode scene{NodeId("n0"), "hi", "", false, Provenance::Authored};
  EXPECT_TRUE(caught([&] { compose_feedback(p, scene, "u", decision::Rejected{}); }).is_provider_error());
}

// --- JSON extraction and prompts ---------------------------------------------------

TEST(Extract, ToleratesFencesAndChatter) {
  EXPECT_EQ(extract_json_object("```json\n{\"a\": 1}\n```")["a"], 1);
  EXPECT_EQ(extract_json_object("Here you go: {\"a\": {\"b\": 2}} hope it helps")["a"]["b"], 2);
  EXPECT_EQ(caught([] { extract_json_object("no braces"); }).code(), Errc::SchemaViolation);
  EXPECT_EQ(caught([] { extract_json_object("{broken"); }).code(), Errc::SchemaViolation);
}

TEST(Prompts, CatalogueIsComplete) {
  for (auto name : {"generate", "classify", "branch", "expand", "feedback", "repair"}) {
    const auto& t = prompt_template(name);
    EXPECT_GE(t.version, 1) << name;
    EXPECT_FALSE(t.user.empty()) << name;
  }
  EXPECT_EQ(caught([] { prompt_template("nope"); }).code(), Errc::NotFound);
}

TEST(Prompts, Placeholders) {
  EXPECT_EQ(fill_placeholders("a {{x}} b {{y}} {{x}}", {{"x", "1"}}), "a 1 b {{y}} 1");
  auto t = parse_prompt_template("t", "# version: 3\n[system]\nsys {{v}}\n[user]\nuser {{v}}\n");
  EXPECT_EQ(t.version, 3);
  EXPECT_EQ(t.render_system({{"v", "A"}}), "sys A");
  EXPECT_EQ(t.render_user({{"v", "B"}}), "user B");
}

// --- Providers ----------------------------------------------------------------------

TEST(Provider, MockIsDeterministic) {
  ProviderConfig config;
  PromptRequest req;
  req.task = PromptTask::Feedback;
  req.variables = {{"decision_label", "patient"}};
  EXPECT_EQ(complete(config, req), "Mock feedback for intent patient");
  EXPECT_EQ(complete(config, req), complete(config, req));
}

TEST(Provider, ConfigChecks) {
  ProviderConfig remote;
  remote.kind = ProviderKind::RemoteChatCompletion;
  EXPECT_EQ(caught([&] { remote.check(); }).code(), Errc::InvalidArgument);
  ProviderConfig mock;
  mock.api_key = "k";
  EXPECT_EQ(caught([&] { mock.check(); }).code(), Errc::InvalidArgument);
}

TEST(Provider, UnreachableRemoteIsUnavailable) {
  ProviderConfig c;
  c.kind = ProviderKind::RemoteChatCompletion;
  c.base_url = "http://127.0.0.1:1/v1";
  c.api_key = "k";
  c.model = "m";
  c.timeout = std::chrono::milliseconds(500);
  c.backoff = std::chrono::milliseconds(1);
  PromptRequest req;
  req.user_text = "hello";
  EXPECT_EQ(caught([&] { complete(c, req); }).code(), Errc::ProviderUnavailable);
}

TEST(Provider, RemoteRequestShape) {
  FakeChatServer server;
  server.handler = [](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(FakeChatServer::reply("{\"ok\":true}"), "application/json");
  };
  auto provider = make_provider(server.config());
  PromptRequest req;
  req.system_text = "sys";
  req.user_text = "usr";
  req.expects = Expectation::StructuredJson;
  EXPECT_EQ(provider->complete(req), "{\"ok\":true}");
  EXPECT_EQ(server.last_auth, "Bearer test-key");
  auto body = Json::parse(server.last_body);
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(body["response_format"]["type"], "json_object");
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "usr");
}

TEST(Provider, RetriesServerErrorsThenSucceeds) {
  FakeChatServer server;
  server.handler = [](const httplib::Request&, httplib::Response& res, int hit) {
    if (hit == 1) {
      res.status = 503;
      return;
    }
    res.set_content(FakeChatServer::reply("second time lucky"), "application/json");
  };
  EXPECT_EQ(make_provider(server.config())->complete(PromptRequest{}), "second time lucky");
  EXPECT_EQ(server.hits.load(), 2);
}

TEST(Provider, ClientErrorsAreNotRetried) {
  FakeChatServer server;
  server.handler = [](const httplib::Request&, httplib::Response& res, int) {
    res.status = 401;
    res.set_content("{\"error\":\"bad key\"}", "application/json");
  };
  auto err = caught([&] { make_provider(server.config())->complete(PromptRequest{}); });
  EXPECT_EQ(err.code(), Errc::ProviderHttp);
  EXPECT_EQ(err.status(), 401);
  EXPECT_EQ(server.hits.load(), 1);
}

TEST(Provider, PersistentServerErrorReportsStatus) {
  FakeChatServer server;
  server.handler = [](const httplib::Request&, httplib::Response& res, int) { res.status = 500; };
  auto config = server.config();
  config.max_retries = 2;
  auto err = caught([&] { make_provider(config)->complete(PromptRequest{}); });
  EXPECT_EQ(err.code(), Errc::ProviderHttp);
  EXPECT_EQ(err.status(), 500);
  EXPECT_EQ(server.hits.load(), 3);
}

TEST(Provider, SlowServerTimesOut) {
  FakeChatServer server;
  server.handler = [](const httplib::Request&, httplib::Response& res, int) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(FakeChatServer::reply("late"), "application/json");
  };
  auto config = server.config();
  config.timeout = std::chrono::milliseconds(200);
  config.max_retries = 0;
  EXPECT_EQ(caught([&] { make_provider(config)->complete(PromptRequest{}); }).code(), Errc::ProviderTimeout);
}

TEST(Provider, RemoteDrivesClassification) {
  FakeChatServer server;
  server.handler = [](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(FakeChatServer::reply(R"({"matches":[{"edge_id":"e2","confidence":0.8}]})"),
                    "application/json");
  };
  auto provider = make_provider(server.config());
  auto g = fx::customer_service();
  auto m = classify_intent(*provider, "calm down", candidates_of(g, "n0"));
  EXPECT_EQ(m[0], (IntentMatch{EdgeId("e2"), 0.8}));
}
