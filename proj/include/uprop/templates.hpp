#pragma once

// Named prompt templates for the two shipped task styles.

#include <string>
#include <vector>

#include "uprop/client.hpp"

namespace uprop::orchestrator {

// Terminal-agent instructions plus the one-shot demonstration, rendered as
// alternating chat turns. The final user turn states the new problem.
std::vector<client::ChatMessage> os_template_messages(
    const std::string& instruction);

// Thought/Action/Observation instructions with a worked multi-hop example,
// as a single user turn ending in the question.
std::vector<client::ChatMessage> react_template_messages(
    const std::string& instruction);

}  // namespace uprop::orchestrator
