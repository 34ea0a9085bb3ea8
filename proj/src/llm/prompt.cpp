#include "peerloop/llm/prompt.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "peerloop/common/assets.hpp"

namespace peerloop::llm {

std::string render_template(std::string_view tmpl, const TemplateVars& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && (std::isalnum(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) ++j;
            if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
                auto it = vars.find(tmpl.substr(i + 1, j - i - 1));
                if (it != vars.end()) {
                    out += it->second;
                    i = j + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

PromptLibrary::PromptLibrary(std::optional<std::filesystem::path> override_dir)
    : override_dir_(std::move(override_dir)) {}

std::string PromptLibrary::get(std::string_view name) const {
    const std::string file = std::string(name) + ".txt";
    if (override_dir_) {
        std::ifstream in(*override_dir_ / file);
        if (in) {
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }
    }
    return std::string(assets::get("prompts/" + file));
}

std::string PromptLibrary::render(std::string_view name, const TemplateVars& vars) const {
    return render_template(get(name), vars);
}

}  // namespace peerloop::llm
