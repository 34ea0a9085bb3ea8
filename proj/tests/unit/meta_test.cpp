#include <gtest/gtest.h>

#include <atomic>

#include "peerloop/common/error.hpp"
#include "peerloop/meta/meta_review.hpp"
#include "support/stubs.hpp"

using namespace peerloop;
using namespace peerloop::meta;
using core::Kind;
using nlohmann::json;

namespace {

const std::string kData = PEERLOOP_TEST_DATA;

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::kIo;
}

std::string planner_reply(int n) {
    json r = json::array();
    for (int i = 0; i < n; ++i)
        r.push_back({{"role", "Reviewer " + std::to_string(i)}, {"expertise", "area " + std::to_string(i)},
                     {"instructions", "check everything"}});
    return json{{"topics", {"t"}}, {"reviewers", r}}.dump();
}

std::string sub_reply(int score) {
    json c;
    for (auto k : {"soundness", "presentation", "contribution"}) c[k] = {{"score", score}, {"comment", "because"}};
    return json{{"criteria", c}, {"notes", "n"}}.dump();
}

std::string summary_reply(int rating, std::string decision, int crit = 2) {
    return json{{"summary", "s"},
                {"decision", decision},
                {"justification", "j"},
                {"criteria", {{"soundness", crit}, {"presentation", crit}, {"contribution", crit}}},
                {"rating", rating}}
        .dump();
}

bool is_planner(const llm::ChatRequest& r) { return stubs::prompt_contains(r, "Planner Agent"); }
bool is_summarizer(const llm::ChatRequest& r) { return stubs::prompt_contains(r, "Summarizer Agent"); }

class CountingSearch : public lit::SearchClient {
public:
    std::atomic<int> calls{0};
    std::vector<lit::RelatedPaper> search(const std::string&, std::size_t) override {
        ++calls;
        return {lit::RelatedPaper{"Shared Related Work", "abs", 2021, "V", 3}};
    }
};

struct Harness {
    stubs::StubGateway stub;
    llm::PromptLibrary prompts;
    CountingSearch search;
    MetaReviewer meta{stub.gateway, &search, prompts};
    ReviewStandard standard = builtin_standard(Kind::kPaper);
};

std::vector<ReviewerSpec> specs(int n) {
    return json::parse(planner_reply(n))["reviewers"].get<std::vector<ReviewerSpec>>();
}

}  // namespace

TEST(Standard, BuiltinsLoad) {
    for (auto kind : {Kind::kProposal, Kind::kPaper}) {
        auto s = builtin_standard(kind);
        EXPECT_EQ(s.kind, kind);
        EXPECT_EQ(s.criterion_names(), (std::vector<std::string>{"soundness", "presentation", "contribution"}));
        EXPECT_GE(s.default_reviewer_count, 3);
        EXPECT_LE(s.default_reviewer_count, 5);
        EXPECT_EQ(s.min_reviewers, 2);
        EXPECT_EQ(s.max_reviewers, 6);
    }
}

TEST(Standard, RejectsInconsistentDocuments) {
    const std::string base = "name: x\nkind: paper\ncriteria:\n  - name: a\n";
    EXPECT_NO_THROW(parse_standard(base));
    EXPECT_EQ(code_of([&] { parse_standard(base + "default_reviewer_count: 6\n"); }), ErrorCode::kConfig);
    EXPECT_EQ(code_of([&] { parse_standard(base + "default_reviewer_count: 2\n"); }), ErrorCode::kConfig);
    EXPECT_EQ(code_of([&] { parse_standard(base + "  - name: a\n"); }), ErrorCode::kConfig);
    EXPECT_EQ(code_of([] { parse_standard("name: x\nkind: paper\n"); }), ErrorCode::kConfig);
    EXPECT_EQ(code_of([] { parse_standard("name: [unclosed"); }), ErrorCode::kConfig);
}

TEST(Planner, InRangeCountKept) {
    Harness h;
    h.stub.backend->add_responder([](const llm::ChatRequest&) { return planner_reply(4); });
    auto out = h.meta.plan_reviewers("doc", h.standard, "p");
    EXPECT_EQ(out, specs(4));
}

TEST(Planner, ClampOracleOverCounts) {
    for (int n = 0; n <= 10; ++n) {
        Harness h;
        h.stub.backend->add_responder([n](const llm::ChatRequest&) { return planner_reply(n); });
        auto out = h.meta.plan_reviewers("doc", h.standard, "p");
        const int expected = std::clamp(n, 2, 6);
        ASSERT_EQ(static_cast<int>(out.size()), expected) << n;
        for (int i = 0; i < std::min(n, 6); ++i) EXPECT_EQ(out[i].role, "Reviewer " + std::to_string(i));
        for (int i = std::min(n, 6); i < expected; ++i) {
            EXPECT_EQ(out[i].role, kGeneralistRole);
            EXPECT_FALSE(out[i].instructions.empty());
        }
    }
}

TEST(Planner, DocumentTruncatedTo3000Tokens) {
    Harness h;
    llm::ChatRequest seen;
    h.stub.backend->add_responder([&](const llm::ChatRequest& r) {
        seen = r;
        return planner_reply(3);
    });
    std::string body;
    for (int i = 0; i < 5000; ++i) body += "token" + std::to_string(i) + " ";
    h.meta.plan_reviewers(body + "TAILMARKER", h.standard, "p");
    EXPECT_TRUE(stubs::prompt_contains(seen, "token0 "));
    EXPECT_FALSE(stubs::prompt_contains(seen, "TAILMARKER"));
    EXPECT_TRUE(stubs::prompt_contains(seen, "name: default-paper"));
}

TEST(SubReviews, AllSucceedAndLiteratureRetrievedOnce) {
    Harness h;
    std::atomic<int> saw_literature{0};
    h.stub.backend->add_responder([&](const llm::ChatRequest& r) {
        if (stubs::prompt_contains(r, "Shared Related Work")) ++saw_literature;
        return sub_reply(2);
    });
    auto batch = h.meta.run_sub_reviews(specs(3), "doc", h.standard, {"m1", "m2"}, true);
    ASSERT_EQ(batch.reviews.size(), 3u);
    EXPECT_EQ(batch.reviews[0].model_id, "m1");
    EXPECT_EQ(batch.reviews[1].model_id, "m2");
    EXPECT_EQ(batch.reviews[2].model_id, "m1");
    EXPECT_EQ(batch.reviews[1].reviewer_role, "Reviewer 1");
    EXPECT_EQ(h.search.calls.load(), 1);
    EXPECT_EQ(saw_literature.load(), 3);
}

TEST(SubReviews, TooFewSurvivors) {
    Harness h;
    h.stub.backend->add_responder([](const llm::ChatRequest& r) -> std::optional<std::string> {
        if (stubs::prompt_contains(r, "Role: Reviewer 0")) return sub_reply(3);
        return std::nullopt;  // unanswered -> backend error
    });
    EXPECT_EQ(code_of([&] { h.meta.run_sub_reviews(specs(3), "doc", h.standard, {"m"}, false); }),
              ErrorCode::kTooFewReviews);
}

TEST(SubReviews, OutOfRangeScoreDropsThatReviewer) {
    Harness h;
    h.stub.backend->add_responder([](const llm::ChatRequest& r) {
        return stubs::prompt_contains(r, "Role: Reviewer 1") ? sub_reply(5) : sub_reply(1);
    });
    auto batch = h.meta.run_sub_reviews(specs(3), "doc", h.standard, {"m"}, false);
    ASSERT_EQ(batch.reviews.size(), 2u);
    ASSERT_EQ(batch.dropped.size(), 1u);
    EXPECT_NE(batch.dropped[0].find("Reviewer 1"), std::string::npos);
    EXPECT_NE(batch.dropped[0].find("SchemaViolation"), std::string::npos);
    for (const auto& r : batch.reviews)
        for (const auto& [k, c] : r.criteria) EXPECT_EQ(c.score, 1);
}

TEST(Summarize, PassesModelVerdictThrough) {
    Harness h;
    h.stub.backend->add_responder([](const llm::ChatRequest& r) {
        return is_summarizer(r) ? summary_reply(5, "reject") : sub_reply(2);
    });
    auto reviews = h.meta.run_sub_reviews(specs(2), "doc", h.standard, {"m"}, false).reviews;
    auto rep = h.meta.summarize(reviews, h.standard, "s");
    EXPECT_EQ(rep.rating, 5);
    EXPECT_EQ(rep.decision, Decision::kReject);
}

TEST(Summarize, RatingOutOfRangeIsSchemaViolation) {
    Harness h;
    h.stub.backend->add_responder([](const llm::ChatRequest& r) {
        return is_summarizer(r) ? summary_reply(11, "accept") : sub_reply(2);
    });
    auto reviews = h.meta.run_sub_reviews(specs(2), "doc", h.standard, {"m"}, false).reviews;
    EXPECT_EQ(code_of([&] { h.meta.summarize(reviews, h.standard, "s"); }), ErrorCode::kSchemaViolation);
}

TEST(Summarize, NoReconciliationOfScoresAndRating) {
    Harness h;
    h.stub.backend->add_responder([](const llm::ChatRequest& r) {
        return is_summarizer(r) ? summary_reply(3, "accept", 4) : sub_reply(2);
    });
    auto reviews = h.meta.run_sub_reviews(specs(2), "doc", h.standard, {"m"}, false).reviews;
    auto rep = h.meta.summarize(reviews, h.standard, "s");
    EXPECT_EQ(rep.rating, 3);
    EXPECT_EQ(rep.decision, Decision::kAccept);
    EXPECT_EQ(rep.criteria_scores, (std::map<std::string, int>{{"contribution", 4}, {"presentation", 4}, {"soundness", 4}}));
}

TEST(Pipeline, DeterministicEndToEnd) {
    auto run = [] {
        Harness h;
        h.stub.backend->add_responder([](const llm::ChatRequest& r) {
            if (is_planner(r)) return planner_reply(4);
            if (is_summarizer(r)) return summary_reply(6, "accept");
            return sub_reply(static_cast<int>(llm::prompt_hash(r)[0]) % 5);
        });
        return json(h.meta.run("A paper about things", h.standard, {"p", {"a", "b", "c"}, "s"}, true)).dump();
    };
    const auto first = run();
    EXPECT_EQ(first, run());
    auto doc = json::parse(first);
    EXPECT_EQ(doc["specs"].size(), 4u);
    EXPECT_EQ(doc["sub_reviews"].size(), 4u);
    EXPECT_EQ(doc["report"]["rating"], 6);
}

TEST(Pipeline, SerializationRoundTrips) {
    SubReview r{"role", "m", {{"soundness", {3, "ok"}}}, "notes"};
    EXPECT_EQ(json::parse(json(r).dump()).get<SubReview>(), r);
    MetaReviewReport m{"s", Decision::kAccept, "j", {{"soundness", 1}}, 7};
    EXPECT_EQ(json::parse(json(m).dump()).get<MetaReviewReport>(), m);
}
