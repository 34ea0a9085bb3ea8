#pragma once

#include <memory>

#include "peerloop/common/clock.hpp"
#include "peerloop/lit/retrieval.hpp"
#include "peerloop/llm/gateway.hpp"
#include "peerloop/meta/meta_review.hpp"
#include "peerloop/pairwise/pairwise.hpp"
#include "peerloop/review/single.hpp"
#include "peerloop/voting/voting.hpp"
#include "peerloop/service/config.hpp"

namespace peerloop::service {

/// Gateway with the builtin schemas and one route per configured backend.
/// API keys are read from the environment variables the config names.
std::unique_ptr<llm::Gateway> make_gateway(const ServiceConfig& config);

/// Null when literature.provider is "none".
std::shared_ptr<lit::SearchClient> make_search(const ServiceConfig& config, const Clock& clock);

/// Engine settings derived from the configured budgets.
review::ReviewConfig review_config(const ServiceConfig& config);
meta::MetaConfig meta_config(const ServiceConfig& config);
voting::VotingConfig voting_config(const ServiceConfig& config);
pairwise::PairwiseConfig pairwise_config(const ServiceConfig& config);

/// Configured standard for `kind`, or the builtin one. Throws kConfig when
/// the file declares another kind.
meta::ReviewStandard standard_for(const ServiceConfig& config, core::Kind kind);

}  // namespace peerloop::service
