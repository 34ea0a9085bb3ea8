#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace peerloop::llm {

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Replaces each {name} whose name is in `vars`. Other braces are left
/// untouched and substituted values are never rescanned.
std::string render_template(std::string_view tmpl, const TemplateVars& vars);

/// Prompt templates by name ("review_paper", "vote_proposal", ...). Files in
/// the override directory win over the built-in copies.
class PromptLibrary {
public:
    explicit PromptLibrary(std::optional<std::filesystem::path> override_dir = std::nullopt);

    std::string get(std::string_view name) const;
    std::string render(std::string_view name, const TemplateVars& vars) const;

private:
    std::optional<std::filesystem::path> override_dir_;
};

}  // namespace peerloop::llm
