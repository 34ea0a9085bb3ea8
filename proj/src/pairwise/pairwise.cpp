#include "peerloop/pairwise/pairwise.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/ids.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/core/submission.hpp"
#include "peerloop/llm/budget.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::pairwise {

using nlohmann::json;

std::string_view to_string(Side s) {
    switch (s) {
        case Side::kA: return "A";
        case Side::kB: return "B";
        case Side::kTie: return "Tie";
    }
    return "?";
}

std::string_view to_string(Mitigation m) {
    return m == Mitigation::kBothOrders ? "BothOrders" : "RandomizeOrder";
}

std::string_view to_string(Order o) { return o == Order::kAB ? "AB" : "BA"; }

Mitigation mitigation_from_string(std::string_view s) {
    const auto l = text::to_lower_ascii(s);
    if (l == "bothorders" || l == "both") return Mitigation::kBothOrders;
    if (l == "randomizeorder" || l == "random" || l == "randomize") return Mitigation::kRandomizeOrder;
    throw Error(ErrorCode::kInvalidArgument, "unknown mitigation '" + std::string(s) + "'");
}

void to_json(json& j, const PairwiseVerdict& v) {
    j = json{{"winner", to_string(v.winner)}, {"mitigation", to_string(v.mitigation)}};
    j["orientations"] = json::array();
    for (const auto& o : v.orientation_results)
        j["orientations"].push_back({{"order", to_string(o.order)}, {"raw_winner", o.raw_winner}});
}

void to_json(json& j, const BenchmarkResult& r) {
    j = json{{"accuracy", r.accuracy}, {"n_pairs", r.n_pairs}, {"tie_count", r.tie_count},
             {"correct", r.correct},   {"skipped", r.skipped}, {"records", json::array()}};
    for (const auto& p : r.records) {
        json rec{{"index", p.index}, {"label", to_string(p.label)}, {"verdict", to_string(p.verdict)},
                 {"credit", p.credit}};
        if (!p.error.empty()) rec["error"] = p.error;
        j["records"].push_back(std::move(rec));
    }
}

Side map_raw_winner(Order order, int raw_position) {
    if (raw_position != 1 && raw_position != 2)
        throw Error(ErrorCode::kInvalidArgument, fmt::format("raw position must be 1 or 2, got {}", raw_position));
    const bool first = raw_position == 1;
    return (order == Order::kAB) == first ? Side::kA : Side::kB;
}

PairwiseJudge::PairwiseJudge(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                             PairwiseConfig config)
    : gateway_(gateway), search_(search), prompts_(prompts), config_(config) {}

int PairwiseJudge::ask(std::string_view first, std::string_view second, const std::string& lit_first,
                       const std::string& lit_second, core::Kind kind, const std::string& model_id) {
    const bool proposal = kind == core::Kind::kProposal;
    const auto budget = llm::TokenBudget(proposal ? config_.proposal_budget : config_.paper_budget);
    llm::TemplateVars vars{{"related_literature1", lit_first}, {"related_literature2", lit_second}};
    vars[proposal ? "proposal1_text" : "paper1_text"] = llm::truncate_to_budget(first, budget);
    vars[proposal ? "proposal2_text" : "paper2_text"] = llm::truncate_to_budget(second, budget);

    llm::ChatRequest req;
    req.model_id = model_id;
    req.messages.push_back({llm::Role::kUser, prompts_.render(proposal ? "pairwise_proposal" : "pairwise_paper", vars)});
    const auto reply = gateway_.complete_structured(req, llm::schemas::kPairwise);
    const std::string pick = reply.contains("betterproposal") ? reply["betterproposal"].get<std::string>()
                                                              : reply["betterpaper"].get<std::string>();
    return pick.back() == '1' ? 1 : 2;
}

PairwiseVerdict PairwiseJudge::compare(std::string_view doc_a, std::string_view doc_b, core::Kind kind,
                                       const std::string& model_id, Mitigation mitigation, bool use_rag,
                                       std::uint64_t seed) {
    if (text::trim(doc_a).empty() || text::trim(doc_b).empty())
        throw Error(ErrorCode::kEmptyBody, "both documents must be non-empty");

    std::string lit_a, lit_b;
    if (use_rag) {
        const llm::TokenBudget budget(config_.literature_budget);
        auto la = lit::gather_literature(search_, doc_a, config_.literature_k, budget, true);
        auto lb = lit::gather_literature(search_, doc_b, config_.literature_k, budget, true);
        if (la.block.source_count) lit_a = "Related literature:\n" + la.block.text;
        if (lb.block.source_count) lit_b = "Related literature:\n" + lb.block.text;
    }

    auto run = [&](Order order) {
        const int raw = order == Order::kAB ? ask(doc_a, doc_b, lit_a, lit_b, kind, model_id)
                                            : ask(doc_b, doc_a, lit_b, lit_a, kind, model_id);
        return OrientationResult{order, raw};
    };

    PairwiseVerdict v;
    v.mitigation = mitigation;
    if (mitigation == Mitigation::kRandomizeOrder) {
        const Order order = (splitmix64(seed) & 1u) ? Order::kBA : Order::kAB;
        v.orientation_results.push_back(run(order));
        v.winner = map_raw_winner(order, v.orientation_results[0].raw_winner);
    } else {
        v.orientation_results.push_back(run(Order::kAB));
        v.orientation_results.push_back(run(Order::kBA));
        const Side fwd = map_raw_winner(Order::kAB, v.orientation_results[0].raw_winner);
        const Side rev = map_raw_winner(Order::kBA, v.orientation_results[1].raw_winner);
        v.winner = fwd == rev ? fwd : Side::kTie;
    }
    return v;
}

BenchmarkResult PairwiseJudge::evaluate_benchmark(const std::vector<LabeledPair>& pairs, const std::string& model_id,
                                                  Mitigation mitigation, bool use_rag, std::uint64_t seed) {
    if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "benchmark needs at least one pair");

    std::vector<PairRecord> records(pairs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < pairs.size(); i = next++) {
            const auto& p = pairs[i];
            PairRecord& rec = records[i];
            rec.index = i;
            rec.label = p.better;
            try {
                rec.verdict = compare(p.doc_a, p.doc_b, p.kind, model_id, mitigation, use_rag, splitmix64(seed + i)).winner;
                rec.credit = rec.verdict == Side::kTie ? 0.5 : (rec.verdict == p.better ? 1.0 : 0.0);
            } catch (const Error& e) {
                rec.error = e.what();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(config_.workers, pairs.size()));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    BenchmarkResult r;
    double credit = 0.0;
    for (const auto& rec : records) {
        if (!rec.error.empty()) {
            ++r.skipped;
            continue;
        }
        ++r.n_pairs;
        credit += rec.credit;
        if (rec.verdict == Side::kTie) ++r.tie_count;
        else if (rec.credit == 1.0) ++r.correct;
    }
    r.accuracy = r.n_pairs ? credit / static_cast<double>(r.n_pairs) : 0.0;
    r.records = std::move(records);
    return r;
}

std::string assemble_revised_document(const core::SubmissionVersion& version, bool include_response_letter,
                                      std::string_view prior_review) {
    std::string doc = version.body;
    if (!include_response_letter) return doc;
    if (!prior_review.empty()) doc += fmt::format("\n\n# Previous Review\n\n{}", prior_review);
    if (version.response_letter && !version.response_letter->empty())
        doc += fmt::format("\n\n# Response Letter\n\n{}", *version.response_letter);
    return doc;
}

PairwiseVerdict PairwiseJudge::compare_versions(const core::SubmissionVersion& old_version,
                                                const core::SubmissionVersion& new_version, core::Kind kind,
                                                const std::string& model_id, bool include_response_letter,
                                                std::string_view prior_review) {
    if (old_version.version >= new_version.version)
        throw Error(ErrorCode::kInvalidArgument,
                    fmt::format("old version {} is not older than {}", old_version.version, new_version.version));
    return compare(old_version.body, assemble_revised_document(new_version, include_response_letter, prior_review),
                   kind, model_id, Mitigation::kBothOrders, false);
}

void record_version_comparison(core::Submission& s, int old_version, int new_version, const PairwiseVerdict& v) {
    const char* winner = v.winner == Side::kA ? "old" : v.winner == Side::kB ? "new" : "tie";
    core::record_comparison(s, core::VersionComparison{old_version, new_version, winner});
}

std::vector<LabeledPair> parse_pairs(std::string_view jsonl, bool drop_borderline) {
    std::vector<LabeledPair> out;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(jsonl)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            LabeledPair p;
            p.doc_a = j.at("doc_a").get<std::string>();
            p.doc_b = j.at("doc_b").get<std::string>();
            const auto better = j.at("better").get<std::string>();
            if (better != "A" && better != "B") throw Error(ErrorCode::kInvalidArgument, "better must be A or B");
            p.better = better == "A" ? Side::kA : Side::kB;
            p.kind = core::kind_from_string(j.value("kind", "paper"));
            if (j.contains("rating_a")) p.rating_a = j["rating_a"].get<double>();
            if (j.contains("rating_b")) p.rating_b = j["rating_b"].get<double>();
            if (p.doc_a == p.doc_b) throw Error(ErrorCode::kInvalidArgument, "doc_a and doc_b are identical");
            auto borderline = [](const std::optional<double>& r) { return r && *r >= 5.0 && *r <= 6.0; };
            if (drop_borderline && (borderline(p.rating_a) || borderline(p.rating_b))) continue;
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::kInvalidArgument, fmt::format("pairs line {}: {}", line_no, e.what()));
        } catch (const Error& e) {
            throw Error(ErrorCode::kInvalidArgument, fmt::format("pairs line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

std::vector<LabeledPair> load_pairs(const std::filesystem::path& file, bool drop_borderline) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pairs(ss.str(), drop_borderline);
}

std::string format_benchmark_table(const BenchmarkResult& r, std::string_view model_id, Mitigation mitigation,
                                   bool use_rag) {
    std::string out = fmt::format("{:<24} {:<15} {:<4} {:>6} {:>5} {:>8} {:>9}\n", "Model", "Mitigation", "RAG",
                                  "Pairs", "Ties", "Skipped", "Accuracy");
    out += fmt::format("{:<24} {:<15} {:<4} {:>6} {:>5} {:>8} {:>8.2f}%\n", model_id, to_string(mitigation),
                       use_rag ? "yes" : "no", r.n_pairs, r.tie_count, r.skipped, r.accuracy * 100.0);
    return out;
}

}  // namespace peerloop::pairwise
