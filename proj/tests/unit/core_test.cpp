#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "peerloop/common/error.hpp"
#include "peerloop/core/state_machine.hpp"
#include "peerloop/core/store.hpp"
#include "peerloop/core/submission.hpp"

using namespace peerloop;
using namespace peerloop::core;

namespace {

struct Fixture {
    IdGenerator ids{42};
    ManualClock clock{1'700'000'000'000, 1000};

    Submission make(Kind kind = Kind::kProposal) {
        return create_submission(ids, clock, kind, "A proposal about grokking.", Attribution{"M1", std::nullopt});
    }
};

Submission with_id(std::string id, Status status, int versions) {
    Submission s;
    Event created{1, id, EventType::kCreated,
                  nlohmann::json{{"kind", "Paper"},
                                 {"attribution", Attribution{"M1", std::nullopt}},
                                 {"created_at", 0},
                                 {"version", SubmissionVersion{1, "body v1", {}, {}, 0}}}};
    apply(s, created);
    for (int v = 2; v <= versions; ++v) {
        apply(s, Event{0, id, EventType::kRevisionAdded, nlohmann::json(SubmissionVersion{v, "body", {}, {}, 0})});
    }
    s.status = status;
    return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(CreateSubmission, StartsSubmittedWithOneVersion) {
    Fixture f;
    auto s = f.make();
    EXPECT_EQ(s.status, Status::kSubmitted);
    ASSERT_EQ(s.versions.size(), 1u);
    EXPECT_EQ(s.versions[0].version, 1);
    EXPECT_EQ(s.attribution.ai_developer, "M1");
    EXPECT_EQ(check_invariants(s), "");
}

TEST(CreateSubmission, EmptyBodyRejected) {
    Fixture f;
    EXPECT_EQ(code_of([&] { create_submission(f.ids, f.clock, Kind::kPaper, "", {"M1", {}}); }),
              ErrorCode::kEmptyBody);
}

TEST(CreateSubmission, IdsAreUniqueOverTenThousand) {
    Fixture f;
    std::set<std::string> seen;
    for (int i = 0; i < 10'000; ++i) {
        ASSERT_TRUE(seen.insert(f.make().id).second) << "duplicate at " << i;
    }
}

TEST(AddRevision, AppendsVersionAndResubmits) {
    Fixture f;
    auto s = f.make();
    transition(s, StatusEvent::kScanPassed);
    transition(s, StatusEvent::kReviewComplete);
    ASSERT_EQ(s.status, Status::kRevisionRequested);
    add_revision(s, f.clock, "Improved text.", "Dear reviewers, ...");
    ASSERT_EQ(s.versions.size(), 2u);
    EXPECT_EQ(s.versions[1].version, 2);
    EXPECT_EQ(s.versions[1].response_letter.value(), "Dear reviewers, ...");
    EXPECT_EQ(s.status, Status::kResubmitted);
}

TEST(AddRevision, AcceptedSubmissionCannotBeRevised) {
    auto s = with_id("ab12", Status::kAccepted, 1);
    const auto before = nlohmann::json(s).dump();
    EXPECT_EQ(code_of([&] { add_revision(s, ManualClock{}, "new"); }), ErrorCode::kIllegalState);
    EXPECT_EQ(nlohmann::json(s).dump(), before);
}

TEST(AddRevision, FiveSequentialRevisionsNumberOneToSix) {
    Fixture f;
    auto s = f.make();
    transition(s, StatusEvent::kScanPassed);
    std::vector<std::string> bodies{s.versions[0].body};
    for (int i = 0; i < 5; ++i) {
        transition(s, StatusEvent::kReviewComplete);
        bodies.push_back("revision " + std::to_string(i));
        add_revision(s, f.clock, bodies.back());
    }
    ASSERT_EQ(s.versions.size(), 6u);
    int counter = 0;  // counter oracle
    for (const auto& v : s.versions) {
        EXPECT_EQ(v.version, ++counter);
        EXPECT_EQ(v.body, bodies[counter - 1]);  // append-only: earlier bodies untouched
    }
}

TEST(Transition, TableEntries) {
    auto s = with_id("x", Status::kSubmitted, 1);
    EXPECT_EQ(transition(s, StatusEvent::kScanPassed), Status::kUnderReview);
    auto p = with_id("y", Status::kProvisionallyAccepted, 1);
    EXPECT_EQ(transition(p, StatusEvent::kExternalThresholdMet), Status::kAccepted);
}

TEST(Transition, ExhaustiveSweepMatchesDeclaredTable) {
    // Independent oracle: the allowed edges written out by hand.
    const std::set<std::pair<Status, StatusEvent>> allowed{
        {Status::kSubmitted, StatusEvent::kScanPassed},
        {Status::kSubmitted, StatusEvent::kScanFailed},
        {Status::kUnderReview, StatusEvent::kReviewComplete},
        {Status::kUnderReview, StatusEvent::kRevisionSubmitted},
        {Status::kUnderReview, StatusEvent::kVoteAccept},
        {Status::kUnderReview, StatusEvent::kVoteReject},
        {Status::kRevisionRequested, StatusEvent::kRevisionSubmitted},
        {Status::kRevisionRequested, StatusEvent::kVoteAccept},
        {Status::kRevisionRequested, StatusEvent::kVoteReject},
        {Status::kResubmitted, StatusEvent::kScanFailed},
        {Status::kResubmitted, StatusEvent::kReviewComplete},
        {Status::kResubmitted, StatusEvent::kVoteAccept},
        {Status::kResubmitted, StatusEvent::kVoteReject},
        {Status::kProvisionallyAccepted, StatusEvent::kExternalThresholdMet},
    };
    int succeeded = 0;
    for (Status st : kAllStatuses) {
        for (StatusEvent ev : kAllStatusEvents) {
            auto s = with_id("id", st, 1);
            const auto before = nlohmann::json(s).dump();
            bool ok = true;
            try {
                transition(s, ev);
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::kIllegalTransition);
                ok = false;
            }
            EXPECT_EQ(ok, allowed.count({st, ev}) == 1) << to_string(st) << " x " << to_string(ev);
            if (!ok) EXPECT_EQ(nlohmann::json(s).dump(), before);
            succeeded += ok;
        }
    }
    EXPECT_EQ(succeeded, static_cast<int>(allowed.size()));
    // Quarantined is reachable only from Submitted/Resubmitted.
    for (auto [from, ev] : declared_edges()) {
        if (next_state(from, ev) == Status::kQuarantined)
            EXPECT_TRUE(from == Status::kSubmitted || from == Status::kResubmitted);
    }
}

TEST(AssignDoi, FormatAndIdempotence) {
    auto s = with_id("ab12", Status::kAccepted, 2);
    EXPECT_EQ(assign_doi(s), "10.99999/aixiv.ab12.v2");
    EXPECT_EQ(code_of([&] { assign_doi(s); }), ErrorCode::kAlreadyAssigned);
    EXPECT_EQ(s.doi.value(), "10.99999/aixiv.ab12.v2");
}

TEST(AssignDoi, RejectedIsIllegal) {
    auto s = with_id("ab12", Status::kRejected, 1);
    EXPECT_EQ(code_of([&] { assign_doi(s); }), ErrorCode::kIllegalState);
}

TEST(Engagement, LikesAndComments) {
    Fixture f;
    auto s = f.make();
    add_like(s);
    add_like(s);
    add_comment(s, f.clock, "alice", "nice method");
    EXPECT_EQ(s.likes, 2);
    ASSERT_EQ(s.comments.size(), 1u);
    EXPECT_EQ(s.comments[0].body, "nice method");
    EXPECT_EQ(code_of([&] { add_comment(s, f.clock, "bob", ""); }), ErrorCode::kEmptyBody);
}

TEST(StateMachineProperty, RandomReplayStaysOnDeclaredEdges) {
    std::mt19937_64 rng(7);
    Fixture f;
    auto s = f.make();
    for (int i = 0; i < 10'000; ++i) {
        const auto ev = kAllStatusEvents[rng() % std::size(kAllStatusEvents)];
        const Status before = s.status;
        const auto expected = next_state(before, ev);
        try {
            transition(s, ev);
            ASSERT_TRUE(expected.has_value());
            ASSERT_EQ(s.status, *expected);
        } catch (const Error&) {
            ASSERT_FALSE(expected.has_value());
            ASSERT_EQ(s.status, before);
        }
        if (is_terminal(s.status)) s = f.make();
    }
}

TEST(Store, FailedMutationCommitsNothing) {
    Fixture f;
    SubmissionStore store;
    auto s = store.insert(f.make());
    const auto seq = store.last_seq();
    EXPECT_THROW(store.mutate(s.id,
                              [](Submission& w) {
                                  transition(w, StatusEvent::kScanPassed);
                                  transition(w, StatusEvent::kExternalThresholdMet);  // illegal
                              }),
                 Error);
    EXPECT_EQ(store.last_seq(), seq);
    EXPECT_EQ(store.get(s.id).status, Status::kSubmitted);
    EXPECT_THROW(store.get("nope"), Error);
}

TEST(Store, ReplayReconstructsSnapshotByteIdentically) {
    Fixture f;
    SubmissionStore store;
    std::vector<std::string> ids;
    for (int i = 0; i < 5; ++i) ids.push_back(store.insert(f.make()).id);
    store.mutate(ids[0], [&](Submission& s) {
        transition(s, StatusEvent::kScanPassed);
        transition(s, StatusEvent::kVoteAccept);
        assign_doi(s);
        add_like(s);
    });
    store.mutate(ids[1], [&](Submission& s) {
        transition(s, StatusEvent::kScanPassed);
        add_revision(s, f.clock, "v2", "letter");
        add_comment(s, f.clock, "carol", "interesting");
    });
    auto replayed = SubmissionStore::replay(store.events());
    EXPECT_EQ(replayed->snapshot_text(), store.snapshot_text());
    EXPECT_EQ(check_invariants(store.get(ids[0])), "");
}

TEST(Store, PersistsAndReloads) {
    const auto dir = std::filesystem::temp_directory_path() / "peerloop_store_test";
    std::filesystem::remove_all(dir);
    Fixture f;
    std::string snapshot;
    std::string id;
    {
        SubmissionStore store(dir);
        id = store.insert(f.make()).id;
        store.mutate(id, [](Submission& s) { transition(s, StatusEvent::kScanPassed); });
        store.checkpoint();
        store.mutate(id, [](Submission& s) { add_like(s); });
        snapshot = store.snapshot_text();
        EXPECT_FALSE(store.put_blob("%PDF-1.4 ...").empty());
    }
    SubmissionStore reopened(dir);
    EXPECT_EQ(reopened.snapshot_text(), snapshot);
    EXPECT_EQ(reopened.get(id).likes, 1);
    std::filesystem::remove_all(dir);
}

TEST(Store, ConcurrentRevisionsSerializePerId) {
    Fixture f;
    SubmissionStore store;
    auto id = store.insert(f.make()).id;
    store.mutate(id, [](Submission& s) {
        transition(s, StatusEvent::kScanPassed);
        transition(s, StatusEvent::kReviewComplete);
    });
    std::atomic<int> ok{0}, illegal{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 2; ++t) {
        threads.emplace_back([&, t] {
            try {
                store.mutate(id, [&](Submission& s) { add_revision(s, f.clock, "rev " + std::to_string(t)); });
                ++ok;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::kIllegalState) ++illegal;
            }
        });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(ok.load(), 1);
    EXPECT_EQ(illegal.load(), 1);
    EXPECT_EQ(store.get(id).versions.size(), 2u);
}

TEST(Store, FeedOrderIsNewestFirst) {
    Fixture f;
    SubmissionStore store;
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(store.insert(f.make()).id);
    auto list = store.list_newest_first();
    ASSERT_EQ(list.size(), 4u);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(list[i].id, ids[3 - i]);
}
