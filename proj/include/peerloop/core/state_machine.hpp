#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "peerloop/core/types.hpp"

namespace peerloop::core {

/// Next state for (state, event), or nullopt when the edge is not declared.
std::optional<Status> next_state(Status from, StatusEvent event);

/// The declared edge list, in table order.
std::vector<std::pair<Status, StatusEvent>> declared_edges();

bool is_terminal(Status s);

}  // namespace peerloop::core
