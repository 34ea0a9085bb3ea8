#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

#include "peerloop/common/error.hpp"
#include "peerloop/llm/budget.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/json_extract.hpp"
#include "peerloop/llm/schemas.hpp"

using namespace peerloop;
using namespace peerloop::llm;

namespace {

ChatRequest request(std::string model, std::string text) {
    return ChatRequest{std::move(model), {{Role::kSystem, "You are a reviewer."}, {Role::kUser, std::move(text)}}};
}

struct GatewayFixture {
    std::vector<std::chrono::milliseconds> sleeps;
    std::shared_ptr<ScriptedBackend> stub = std::make_shared<ScriptedBackend>();
    Gateway gateway{GatewayOptions{RetryPolicy{}, 2, [this](auto d) { sleeps.push_back(d); }}};

    GatewayFixture() { gateway.add_backend(stub); }
    void always(std::string reply) {
        stub->add_responder([reply](const ChatRequest&) { return reply; });
    }
};

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::kInvalidArgument;
}

std::string words(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    static const char* vocab[] = {"model", "gradient", "über", "数据", "loss", "a", "representation", "grokking"};
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += (rng() % 9 == 0) ? "\n" : " ";
        out += vocab[rng() % std::size(vocab)];
    }
    return out;
}

}  // namespace

TEST(ScriptedBackend, FixtureKeyedOnPromptHashIsDeterministic) {
    GatewayFixture f;
    const auto req = request("m1", "Review this.");
    f.stub->add_fixture(prompt_hash(req), "canned reply");
    EXPECT_EQ(f.gateway.complete(req), "canned reply");
    EXPECT_EQ(f.gateway.complete(req), "canned reply");
    EXPECT_EQ(prompt_hash(req), prompt_hash(request("m1", "Review this.")));
    EXPECT_NE(prompt_hash(req), prompt_hash(request("m2", "Review this.")));
}

TEST(ScriptedBackend, FixturesLoadFromDirectory) {
    const auto dir = std::filesystem::temp_directory_path() / "peerloop_stub_fixtures";
    std::filesystem::create_directories(dir);
    const auto req = request("m1", "hello");
    std::ofstream(dir / (messages_hash(req) + ".txt")) << "from disk";
    Gateway gw;
    gw.add_backend(std::make_shared<ScriptedBackend>(dir));
    EXPECT_EQ(gw.complete(req), "from disk");
    EXPECT_EQ(gw.complete(request("other-model", "hello")), "from disk");
    std::filesystem::remove_all(dir);
}

TEST(Complete, RetriesTransientFailuresThenSucceeds) {
    GatewayFixture f;
    f.always("ok");
    f.stub->fail_next("m1", 2, ErrorCode::kRateLimited);
    EXPECT_EQ(f.gateway.complete(request("m1", "x")), "ok");
    EXPECT_EQ(f.stub->calls("m1"), 3);
    ASSERT_EQ(f.sleeps.size(), 2u);
    EXPECT_EQ(f.sleeps[0].count(), 250);
    EXPECT_EQ(f.sleeps[1].count(), 500);
}

TEST(Complete, AlwaysFailingBackendGivesUpAfterExactlyMaxAttempts) {
    GatewayFixture f;
    f.stub->fail_next("*", -1, ErrorCode::kTimeout);
    EXPECT_EQ(code_of([&] { f.gateway.complete(request("m1", "x")); }), ErrorCode::kBackendError);
    EXPECT_EQ(f.stub->calls("m1"), 3);  // attempt-counter oracle: limit 3
}

TEST(Complete, RejectsInvalidRequests) {
    GatewayFixture f;
    EXPECT_EQ(code_of([&] { f.gateway.complete(ChatRequest{"m1", {}}); }), ErrorCode::kInvalidArgument);
    auto r = request("m1", "x");
    r.temperature = -1;
    EXPECT_EQ(code_of([&] { f.gateway.complete(r); }), ErrorCode::kInvalidArgument);
    Gateway no_backend;
    EXPECT_EQ(code_of([&] { no_backend.complete(request("m1", "x")); }), ErrorCode::kConfig);
}

TEST(Complete, ConcurrencyCapPerBackend) {
    Gateway gw(GatewayOptions{RetryPolicy{}, 2, [](auto) {}});
    auto stub = std::make_shared<ScriptedBackend>();
    std::atomic<int> in_flight{0}, peak{0};
    stub->add_responder([&](const ChatRequest&) -> std::optional<std::string> {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        --in_flight;
        return "ok";
    });
    gw.add_backend(stub, {}, 2);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { gw.complete(request("m", "x")); });
    for (auto& t : threads) t.join();
    EXPECT_LE(peak.load(), 2);
    EXPECT_EQ(stub->total_calls(), 8);
}

TEST(CompleteStructured, ParsesPairwiseVerdict) {
    GatewayFixture f;
    f.always(R"({"betterproposal":"Proposal1"})");
    auto doc = f.gateway.complete_structured(request("m1", "compare"), schemas::kPairwise);
    EXPECT_EQ(doc.at("betterproposal"), "Proposal1");
}

TEST(CompleteStructured, StripsProseAndFences) {
    GatewayFixture f;
    f.always("Sure! Here is my verdict:\n```json\n{\"betterpaper\": \"Paper2\"}\n```\nHope this helps.");
    auto doc = f.gateway.complete_structured(request("m1", "compare"), schemas::kPairwise);
    EXPECT_EQ(doc.at("betterpaper"), "Paper2");
}

TEST(CompleteStructured, EnumViolationAfterTwoCorrectiveRetries) {
    GatewayFixture f;
    f.always(R"({"decision":"maybe"})");
    EXPECT_EQ(code_of([&] { f.gateway.complete_structured(request("m1", "vote"), schemas::kVoteProposal); }),
              ErrorCode::kSchemaViolation);
    EXPECT_EQ(f.stub->calls("m1"), 3);
}

TEST(CompleteStructured, CorrectiveRepromptCarriesErrors) {
    GatewayFixture f;
    std::vector<std::size_t> message_counts;
    f.stub->add_responder([&](const ChatRequest& r) -> std::optional<std::string> {
        message_counts.push_back(r.messages.size());
        if (r.messages.size() == 2) return R"({"betterproposal":"Proposal 1"})";
        EXPECT_NE(r.messages.back().text.find("not one of"), std::string::npos);
        return R"({"betterproposal":"Proposal1"})";
    });
    auto doc = f.gateway.complete_structured(request("m1", "compare"), schemas::kPairwise);
    EXPECT_EQ(doc.at("betterproposal"), "Proposal1");
    EXPECT_EQ(message_counts, (std::vector<std::size_t>{2, 3}));
}

TEST(CompleteStructured, UnknownSchema) {
    GatewayFixture f;
    f.always("{}");
    EXPECT_EQ(code_of([&] { f.gateway.complete_structured(request("m1", "x"), "nope"); }), ErrorCode::kUnknownSchema);
}

TEST(JsonExtract, Variants) {
    EXPECT_TRUE(extract_json(R"({"a":1})").has_value());
    EXPECT_EQ(extract_json("text {\"a\": \"}\"} more").value().at("a"), "}");
    EXPECT_FALSE(extract_json("no json here").has_value());
    EXPECT_FALSE(extract_json("{broken").has_value());
}

TEST(Schema, ValidationMessagesAndExport) {
    auto s = schemas::vote_schema(schemas::paper_vote_scores(), true);
    nlohmann::json ok{{"decision", "accept"},
                      {"confidence", 0.8},
                      {"reasons", {"clear"}},
                      {"scores", {{"clarity", 7}, {"originality", 6}, {"quality_soundness", 7},
                                  {"significance_impact", 6}, {"rating", 7}}},
                      {"meta", {{"used_lit_search", false}}}};
    EXPECT_TRUE(s.validate(ok).empty());
    auto bad = ok;
    bad["scores"]["rating"] = 6.5;
    bad["confidence"] = 1.3;
    EXPECT_EQ(s.validate(bad).size(), 2u);
    auto js = s.to_json_schema();
    EXPECT_EQ(js["properties"]["scores"]["properties"]["rating"]["type"], "integer");
    EXPECT_EQ(js["additionalProperties"], false);
}

TEST(ModelPanelTest, ExactlyFiveDistinct) {
    EXPECT_NO_THROW(ModelPanel({"a", "b", "c", "d", "e"}));
    EXPECT_EQ(code_of([] { ModelPanel({"a", "b", "c", "d"}); }), ErrorCode::kWrongPanelSize);
    EXPECT_EQ(code_of([] { ModelPanel({"a", "b", "c", "d", "a"}); }), ErrorCode::kDuplicateModel);
}

TEST(Truncate, UnderBudgetUnchanged) {
    const auto text = words(60, 1);
    ASSERT_LE(estimate_tokens(text), 100u);
    EXPECT_EQ(truncate_to_budget(text, TokenBudget(3000)), text);
    EXPECT_EQ(truncate_to_budget("", TokenBudget(8000)), "");
    EXPECT_THROW(TokenBudget(0), Error);
}

TEST(Truncate, LongTextFitsAndIsPrefix) {
    const auto text = words(10'000, 2);
    ASSERT_GT(estimate_tokens(text), 5000u);
    const auto out = truncate_to_budget(text, TokenBudget(5000));
    EXPECT_LE(estimate_tokens(out), 5000u);  // recount with the same estimator
    EXPECT_EQ(text.compare(0, out.size(), out), 0);
    // Cut lands on a whitespace boundary.
    ASSERT_LT(out.size(), text.size());
    EXPECT_TRUE(text[out.size()] == ' ' || text[out.size()] == '\n');
}

TEST(Truncate, PropertyIdempotentAndBounded) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        const auto text = words(rng() % 3000, rng());
        const TokenBudget budget(1 + rng() % 2000);
        const auto once = truncate_to_budget(text, budget);
        ASSERT_LE(estimate_tokens(once), budget.limit());
        ASSERT_EQ(text.compare(0, once.size(), once), 0);
        ASSERT_EQ(truncate_to_budget(once, budget), once);
    }
}

TEST(HttpBackends, OpenAiAndAnthropicAgainstLocalServer) {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        EXPECT_EQ(req.get_header_value("Authorization"), "Bearer k1");
        auto body = nlohmann::json::parse(req.body);
        EXPECT_EQ(body["messages"][1]["content"], "x");
        res.set_content(R"({"choices":[{"message":{"content":"hi from openai"}}]})", "application/json");
    });
    server.Post("/v1/messages", [&](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        EXPECT_EQ(body["system"], "You are a reviewer.");
        EXPECT_EQ(req.get_header_value("x-api-key"), "k2");
        res.set_content(R"({"content":[{"type":"text","text":"hi from anthropic"}]})", "application/json");
    });
    server.Post("/limited/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 429;
        res.set_content("slow down", "text/plain");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    auto transport = std::make_shared<net::HttplibTransport>(std::chrono::seconds(5));

    Gateway gw(GatewayOptions{RetryPolicy{}, 2, [](auto) {}});
    gw.add_backend(std::make_shared<OpenAiBackend>(HttpBackendConfig{base, "k1", "", {}}, transport), {"gpt"});
    gw.add_backend(std::make_shared<AnthropicBackend>(HttpBackendConfig{base, "k2", "", {}}, transport), {"claude"});
    gw.add_backend(
        std::make_shared<OpenAiBackend>(HttpBackendConfig{base + "/limited", "", "", {}}, transport), {"limited"});
    EXPECT_EQ(gw.complete(request("gpt", "x")), "hi from openai");
    EXPECT_EQ(gw.complete(request("claude", "x")), "hi from anthropic");
    EXPECT_EQ(code_of([&] { gw.complete(request("limited", "x")); }), ErrorCode::kBackendError);
    server.stop();
    t.join();
}

TEST(JsonExtract, RepairsPlaceholderEllipsesAndTrailingCommas) {
    auto doc = llm::extract_json(R"({"a": ["x", "y", ...], "b": [...], "c": {"d": 1,}, "e": "keep ... this"})");
    ASSERT_TRUE(doc.has_value());
    EXPECT_EQ((*doc)["a"], nlohmann::json::array({"x", "y"}));
    EXPECT_TRUE((*doc)["b"].empty());
    EXPECT_EQ((*doc)["c"]["d"], 1);
    EXPECT_EQ((*doc)["e"], "keep ... this");
    EXPECT_FALSE(llm::extract_json("{\"a\": [1 2]}").has_value());
}
