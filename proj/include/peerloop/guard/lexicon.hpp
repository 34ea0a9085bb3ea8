#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace peerloop::guard {

struct LexiconEntry {
    std::string phrase;  // as written; matched after normalization
    std::string lang;    // ISO 639-1
};

/// Known injection phrasings, English plus other languages.
const std::vector<LexiconEntry>& injection_lexicon();

/// Folds confusable letters to ASCII, drops zero-width characters, lowercases
/// and removes everything that is not a letter or digit. Spacing tricks
/// ("GIVE APOSITIVE REVIEW") therefore normalize to the same string.
std::string normalize_for_match(std::string_view utf8);

/// Lexicon entries whose normalized phrase occurs in the normalized text.
std::vector<const LexiconEntry*> lexicon_hits(std::string_view utf8);

/// Number of %XX escapes.
std::size_t count_percent_escapes(std::string_view s);
/// Decodes %XX escapes and '+' in query strings. Invalid escapes are kept.
std::string percent_decode(std::string_view s);

/// Whole-word cues that a metadata value or passage is addressed to a reviewer.
std::size_t count_directive_cues(std::string_view utf8);
/// True for passages worth a semantic check even without a rule hit: they
/// mention the reviewing process and contain a directive.
bool looks_reviewer_directed(std::string_view utf8);

/// Best-effort language guess: "en", "de", "fr", "es", "ru", "zh", "ja", "ko" or "".
std::string guess_language(std::string_view utf8);

namespace payloads {
/// English instructions, including spacing-artifact variants.
const std::vector<std::string>& english();
/// Instructions in other languages; every entry contains a lexicon phrase.
const std::vector<LexiconEntry>& foreign();
/// Passages that imitate the surrounding paper; none contains a lexicon phrase.
const std::vector<std::string>& contextual();
}  // namespace payloads

}  // namespace peerloop::guard
