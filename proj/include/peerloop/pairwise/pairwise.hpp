#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peerloop/core/types.hpp"
#include "peerloop/lit/retrieval.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/llm/prompt.hpp"

namespace peerloop::pairwise {

enum class Side { kA, kB, kTie };
enum class Mitigation { kRandomizeOrder, kBothOrders };
/// Presentation order: kAB shows doc_a first.
enum class Order { kAB, kBA };

std::string_view to_string(Side s);
std::string_view to_string(Mitigation m);
std::string_view to_string(Order o);
Mitigation mitigation_from_string(std::string_view s);

struct OrientationResult {
    Order order = Order::kAB;
    int raw_winner = 1;  // position the model picked: 1 or 2

    bool operator==(const OrientationResult&) const = default;
};

struct PairwiseVerdict {
    Side winner = Side::kTie;
    std::vector<OrientationResult> orientation_results;
    Mitigation mitigation = Mitigation::kBothOrders;
};

void to_json(nlohmann::json& j, const PairwiseVerdict& v);

/// Which document won, given the order shown and the position picked.
Side map_raw_winner(Order order, int raw_position);

struct LabeledPair {
    std::string doc_a;
    std::string doc_b;
    Side better = Side::kA;
    core::Kind kind = core::Kind::kPaper;
    std::optional<double> rating_a;  // mean reviewer rating, when known
    std::optional<double> rating_b;
};

struct PairRecord {
    std::size_t index = 0;
    Side label = Side::kA;
    Side verdict = Side::kTie;
    double credit = 0.0;  // 1 correct, 0.5 tie, 0 wrong
    std::string error;    // set when the pair was skipped
};

struct BenchmarkResult {
    double accuracy = 0.0;
    std::size_t n_pairs = 0;  // pairs actually judged
    std::size_t tie_count = 0;
    std::size_t correct = 0;
    std::size_t skipped = 0;
    std::vector<PairRecord> records;
};

void to_json(nlohmann::json& j, const BenchmarkResult& r);

struct PairwiseConfig {
    std::size_t proposal_budget = 3000;
    std::size_t paper_budget = 8000;
    std::size_t literature_budget = 5000;
    std::size_t literature_k = 5;
    std::size_t workers = 8;
};

class PairwiseJudge {
public:
    PairwiseJudge(llm::Gateway& gateway, lit::SearchClient* search, const llm::PromptLibrary& prompts,
                  PairwiseConfig config = {});

    /// `seed` drives the presentation coin under RandomizeOrder.
    PairwiseVerdict compare(std::string_view doc_a, std::string_view doc_b, core::Kind kind,
                            const std::string& model_id, Mitigation mitigation, bool use_rag,
                            std::uint64_t seed = 0);

    /// Ties count 0.5. Failed pairs are recorded and left out of n_pairs.
    BenchmarkResult evaluate_benchmark(const std::vector<LabeledPair>& pairs, const std::string& model_id,
                                       Mitigation mitigation, bool use_rag, std::uint64_t seed);

    /// Old version is A, new version is B; always BothOrders.
    PairwiseVerdict compare_versions(const core::SubmissionVersion& old_version,
                                     const core::SubmissionVersion& new_version, core::Kind kind,
                                     const std::string& model_id, bool include_response_letter,
                                     std::string_view prior_review = {});

private:
    int ask(std::string_view first, std::string_view second, const std::string& lit_first,
            const std::string& lit_second, core::Kind kind, const std::string& model_id);

    llm::Gateway& gateway_;
    lit::SearchClient* search_;
    const llm::PromptLibrary& prompts_;
    PairwiseConfig config_;
};

/// Document the new version is judged as.
std::string assemble_revised_document(const core::SubmissionVersion& version, bool include_response_letter,
                                      std::string_view prior_review);

/// Records the verdict on the submission ("old" / "new" / "tie").
void record_version_comparison(core::Submission& s, int old_version, int new_version, const PairwiseVerdict& v);

/// JSONL of {doc_a, doc_b, better: "A"|"B", kind, rating_a?, rating_b?}. With
/// `drop_borderline`, pairs where either mean rating lies in [5, 6] are skipped.
std::vector<LabeledPair> load_pairs(const std::filesystem::path& file, bool drop_borderline);
std::vector<LabeledPair> parse_pairs(std::string_view jsonl, bool drop_borderline);

std::string format_benchmark_table(const BenchmarkResult& r, std::string_view model_id, Mitigation mitigation,
                                   bool use_rag);

}  // namespace peerloop::pairwise
