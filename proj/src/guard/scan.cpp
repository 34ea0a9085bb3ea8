#include "peerloop/guard/scan.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/text.hpp"
#include "peerloop/guard/lexicon.hpp"
#include "peerloop/llm/schemas.hpp"

namespace peerloop::guard {

std::string_view to_string(AttackCategory c) {
    switch (c) {
        case AttackCategory::kWhiteText: return "white_text";
        case AttackCategory::kMetadata: return "metadata";
        case AttackCategory::kInvisibleChars: return "invisible_chars";
        case AttackCategory::kMixedLanguage: return "mixed_language";
        case AttackCategory::kSteganographic: return "steganographic";
        case AttackCategory::kContextual: return "contextual";
    }
    return "unknown";
}

std::optional<AttackCategory> category_from_string(std::string_view s) {
    static const std::map<std::string, AttackCategory, std::less<>> kCodes = {
        {"WT", AttackCategory::kWhiteText},     {"MD", AttackCategory::kMetadata},
        {"IC", AttackCategory::kInvisibleChars}, {"ML", AttackCategory::kMixedLanguage},
        {"SG", AttackCategory::kSteganographic}, {"CA", AttackCategory::kContextual}};
    if (auto it = kCodes.find(s); it != kCodes.end()) return it->second;
    for (auto c : kAllCategories) {
        if (to_string(c) == s) return c;
    }
    return std::nullopt;
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::kLow: return "low";
        case Severity::kMedium: return "medium";
        case Severity::kHigh: return "high";
    }
    return "low";
}

double severity_weight(Severity s) {
    switch (s) {
        case Severity::kLow: return 1;
        case Severity::kMedium: return 3;
        case Severity::kHigh: return 9;
    }
    return 1;
}

std::string_view to_string(Stage s) { return s == Stage::kCoarse ? "coarse" : "semantic"; }

std::string_view to_string(RuleFamily f) {
    switch (f) {
        case RuleFamily::kKeyword: return "keyword";
        case RuleFamily::kColor: return "color";
        case RuleFamily::kTinyFont: return "tiny_font";
        case RuleFamily::kInvisibleChars: return "invisible_chars";
        case RuleFamily::kMetadata: return "metadata";
        case RuleFamily::kConcealed: return "concealed";
        case RuleFamily::kSemantic: return "semantic";
    }
    return "keyword";
}

std::optional<RuleFamily> rule_family_from_string(std::string_view s) {
    for (auto f : {RuleFamily::kKeyword, RuleFamily::kColor, RuleFamily::kTinyFont, RuleFamily::kInvisibleChars,
                   RuleFamily::kMetadata, RuleFamily::kConcealed, RuleFamily::kSemantic}) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

AttackCategory classify(RuleFamily family, const SpanTraits& t) {
    if (t.in_metadata || family == RuleFamily::kMetadata) return AttackCategory::kMetadata;
    switch (family) {
        case RuleFamily::kInvisibleChars: return AttackCategory::kInvisibleChars;
        case RuleFamily::kConcealed: return AttackCategory::kSteganographic;
        case RuleFamily::kColor:
        case RuleFamily::kTinyFont: return AttackCategory::kWhiteText;
        default: break;
    }
    if (t.concealed) return AttackCategory::kSteganographic;
    if (t.near_background || t.tiny) return AttackCategory::kWhiteText;
    if (t.zero_width || t.confusable || t.url_encoded) return AttackCategory::kInvisibleChars;
    if (t.foreign_language) return AttackCategory::kMixedLanguage;
    return AttackCategory::kContextual;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct StyleKey {
    int page;
    bool near_background, tiny, concealed;
    long r, g, b;
    bool operator==(const StyleKey&) const = default;
};

double baseline(const TextSpan& s) { return s.bbox.y0 + 0.2 * s.bbox.height(); }

}  // namespace

std::vector<TextRun> build_runs(const ExtractedDocument& doc, const CoarseOptions& options) {
    std::vector<TextRun> runs;
    std::optional<StyleKey> prev_key;
    const TextSpan* prev = nullptr;
    for (std::size_t i = 0; i < doc.spans.size(); ++i) {
        const TextSpan& s = doc.spans[i];
        SpanTraits t;
        const bool visible_chars = !normalize_for_match(s.text).empty();
        t.near_background = visible_chars && s.local_background &&
                            color_distance(s.color, *s.local_background) < options.color_distance;
        t.tiny = visible_chars && s.font_size < options.tiny_font_pt;
        t.concealed = s.off_page || s.occluded || s.render_mode == 3 || s.render_mode == 7;
        t.zero_width = (s.encoding_flags & encoding::kZeroWidth) != 0;
        t.confusable = (s.encoding_flags & encoding::kConfusable) != 0;
        const StyleKey key{s.page,
                           t.near_background,
                           t.tiny,
                           t.concealed,
                           std::lround(s.color.r * 100),
                           std::lround(s.color.g * 100),
                           std::lround(s.color.b * 100)};
        const double size = std::max(s.font_size, 1.0);
        const bool continues = prev && prev_key && *prev_key == key &&
                               std::abs(baseline(*prev) - baseline(s)) <= 2.5 * size;
        if (!continues) {
            TextRun run;
            run.page = s.page;
            run.bbox = s.bbox;
            run.font_size = s.font_size;
            run.color = s.color;
            run.traits = t;
            runs.push_back(std::move(run));
        } else {
            TextRun& run = runs.back();
            const bool same_line = std::abs(baseline(*prev) - baseline(s)) <= 0.5 * size;
            const bool adjacent = same_line && s.bbox.x0 - prev->bbox.x1 < 0.15 * size;
            if (!adjacent) run.text += ' ';
            run.bbox = run.bbox.unite(s.bbox);
            run.font_size = std::min(run.font_size, s.font_size);
            run.traits.zero_width = run.traits.zero_width || t.zero_width;
            run.traits.confusable = run.traits.confusable || t.confusable;
        }
        runs.back().text += s.text;
        runs.back().spans.push_back(i);
        prev = &s;
        prev_key = key;
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Coarse rules

namespace {

std::string excerpt(std::string_view s, std::size_t max_cp = 160) {
    const std::size_t cut = text::byte_offset_of(s, max_cp);
    std::string out(s.substr(0, cut));
    if (cut < s.size()) out += "...";
    return out;
}

Anomaly run_anomaly(const TextRun& run, RuleFamily family, Severity severity, std::string evidence,
                    SpanTraits traits) {
    Anomaly a;
    a.family = family;
    a.severity = severity;
    a.traits = traits;
    a.category_hint = classify(family, traits);
    a.location.page = run.page;
    a.location.bbox = run.bbox;
    a.location.invisible_region = traits.concealed;
    a.evidence = std::move(evidence);
    a.passage = run.text;
    return a;
}

std::string describe_hits(const std::vector<const LexiconEntry*>& hits) {
    std::string out;
    for (const auto* h : hits) {
        if (!out.empty()) out += ", ";
        out += fmt::format("\"{}\" ({})", h->phrase, h->lang);
    }
    return out;
}

struct RuleContext {
    const ExtractedDocument& doc;
    const std::vector<TextRun>& runs;
    const CoarseOptions& options;
    std::string dominant_language;
};

std::vector<Anomaly> keyword_rule(const RuleContext& ctx) {
    std::vector<Anomaly> out;
    for (const auto& run : ctx.runs) {
        auto hits = lexicon_hits(run.text);
        SpanTraits t = run.traits;
        if (count_percent_escapes(run.text) >= 2) {
            for (const auto* h : lexicon_hits(percent_decode(run.text))) {
                if (std::find(hits.begin(), hits.end(), h) == hits.end()) {
                    hits.push_back(h);
                    t.url_encoded = true;
                }
            }
        }
        if (hits.empty()) continue;
        t.foreign_language = std::any_of(hits.begin(), hits.end(),
                                         [&](const LexiconEntry* h) { return h->lang != ctx.dominant_language; });
        Anomaly a = run_anomaly(run, RuleFamily::kKeyword, Severity::kHigh,
                                "instruction phrase " + describe_hits(hits) + ": " + excerpt(run.text), t);
        a.lexicon = true;
        a.count = hits.size();
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Anomaly> color_rule(const RuleContext& ctx) {
    std::vector<Anomaly> out;
    for (const auto& run : ctx.runs) {
        if (!run.traits.near_background) continue;
        const TextSpan& s = ctx.doc.spans[run.spans.front()];
        const Rgb bg = s.local_background.value_or(kWhite);
        out.push_back(run_anomaly(
            run, RuleFamily::kColor, Severity::kMedium,
            fmt::format("text colour ({:.2f}, {:.2f}, {:.2f}) is {:.3f} from background ({:.2f}, {:.2f}, {:.2f}): {}",
                        s.color.r, s.color.g, s.color.b, color_distance(s.color, bg), bg.r, bg.g, bg.b,
                        excerpt(run.text)),
            run.traits));
    }
    return out;
}

std::vector<Anomaly> tiny_rule(const RuleContext& ctx) {
    std::vector<Anomaly> out;
    for (const auto& run : ctx.runs) {
        if (!run.traits.tiny) continue;
        out.push_back(run_anomaly(run, RuleFamily::kTinyFont, Severity::kMedium,
                                  fmt::format("font size {:.2f}pt: {}", run.font_size, excerpt(run.text)),
                                  run.traits));
    }
    return out;
}

std::vector<Anomaly> invisible_rule(const RuleContext& ctx) {
    std::vector<Anomaly> out;
    for (const auto& run : ctx.runs) {
        const std::size_t zw = count_zero_width(run.text);
        if (zw > 0) {
            Anomaly a = run_anomaly(run, RuleFamily::kInvisibleChars, zw <= 2 ? Severity::kLow : Severity::kMedium,
                                    fmt::format("{} zero-width characters: {}", zw, excerpt(run.text)), run.traits);
            a.count = zw;
            out.push_back(std::move(a));
        }
        if (run.traits.confusable) {
            out.push_back(run_anomaly(run, RuleFamily::kInvisibleChars, Severity::kMedium,
                                      "look-alike characters from another script: " + excerpt(run.text),
                                      run.traits));
        }
        if (encoding_flags_of(run.text) & encoding::kBidiControl) {
            out.push_back(run_anomaly(run, RuleFamily::kInvisibleChars, Severity::kMedium,
                                      "bidirectional control characters: " + excerpt(run.text), run.traits));
        }
        const std::size_t escapes = count_percent_escapes(run.text);
        if (escapes >= 3) {
            SpanTraits t = run.traits;
            t.url_encoded = true;
            Anomaly a = run_anomaly(run, RuleFamily::kInvisibleChars, Severity::kLow,
                                    fmt::format("{} percent-encoded bytes decode to: {}", escapes,
                                                excerpt(percent_decode(run.text))),
                                    t);
            a.count = escapes;
            out.push_back(std::move(a));
        }
    }
    return out;
}

std::vector<Anomaly> metadata_rule(const RuleContext& ctx) {
    std::vector<Anomaly> out;
    for (const auto& [key, value] : ctx.doc.metadata) {
        auto hits = lexicon_hits(value);
        if (count_percent_escapes(value) >= 2) {
            for (const auto* h : lexicon_hits(percent_decode(value))) {
                if (std::find(hits.begin(), hits.end(), h) == hits.end()) hits.push_back(h);
            }
        }
        Anomaly a;
        a.family = RuleFamily::kMetadata;
        a.traits.in_metadata = true;
        a.category_hint = classify(a.family, a.traits);
        a.location.metadata_key = key;
        a.passage = value;
        if (!hits.empty()) {
            a.severity = Severity::kHigh;
            a.lexicon = true;
            a.count = hits.size();
            a.evidence = fmt::format("/{} holds instruction phrase {}: {}", key, describe_hits(hits), excerpt(value));
        } else if (count_directive_cues(value) >= 2) {
            a.severity = Severity::kMedium;
            a.evidence = fmt::format("/{} reads like an instruction: {}", key, excerpt(value));
        } else {
            continue;
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<Anomaly> concealed_rule(const RuleContext& ctx) {
    std::vector<Anomaly> out;
    for (const auto& run : ctx.runs) {
        if (!run.traits.concealed || normalize_for_match(run.text).empty()) continue;
        std::set<std::string> reasons;
        for (std::size_t i : run.spans) {
            const TextSpan& s = ctx.doc.spans[i];
            if (s.off_page) reasons.insert("outside the page box");
            if (s.occluded) reasons.insert("painted over");
            if (s.render_mode == 3 || s.render_mode == 7) reasons.insert(fmt::format("render mode {}", s.render_mode));
        }
        std::string why;
        for (const auto& r : reasons) why += (why.empty() ? "" : ", ") + r;
        out.push_back(run_anomaly(run, RuleFamily::kConcealed, Severity::kMedium,
                                  "text " + why + ": " + excerpt(run.text), run.traits));
    }
    return out;
}

std::string dominant_language(const ExtractedDocument& doc) {
    const std::string lang = guess_language(doc.full_text());
    return lang.empty() ? "en" : lang;
}

}  // namespace

std::vector<Anomaly> coarse_scan(const ExtractedDocument& doc, const CoarseOptions& options) {
    const auto runs = build_runs(doc, options);
    const RuleContext ctx{doc, runs, options, dominant_language(doc)};
    using Rule = std::vector<Anomaly> (*)(const RuleContext&);
    const std::vector<std::pair<RuleFamily, Rule>> rules = {
        {RuleFamily::kKeyword, keyword_rule},       {RuleFamily::kColor, color_rule},
        {RuleFamily::kTinyFont, tiny_rule},         {RuleFamily::kInvisibleChars, invisible_rule},
        {RuleFamily::kMetadata, metadata_rule},     {RuleFamily::kConcealed, concealed_rule},
    };
    std::vector<std::future<std::vector<Anomaly>>> pending;
    for (const auto& [family, rule] : rules) {
        if (options.disabled.count(family)) continue;
        pending.push_back(std::async(std::launch::async, rule, std::cref(ctx)));
    }
    std::vector<Anomaly> out;
    for (auto& f : pending) {
        auto part = f.get();
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Semantic stage

namespace {

std::set<std::string> content_words(std::string_view s) {
    static const std::set<std::string> kStop = {"this", "that", "with", "from", "have", "which", "their", "there",
                                                "these", "those", "been", "were", "will", "into", "than", "then",
                                                "also", "such", "when", "where", "your", "they", "them", "more"};
    std::set<std::string> out;
    std::string cur;
    auto flush = [&]() {
        if (text::count_code_points(cur) >= 4 && !kStop.count(cur)) out.insert(cur);
        cur.clear();
    };
    for (char32_t cp : text::decode_utf8(s)) {
        if (cp >= 'A' && cp <= 'Z') cp += 32;
        if ((cp >= 'a' && cp <= 'z') || cp >= 0xC0) {
            if (!is_zero_width(cp)) text::append_utf8(cur, cp);
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    const auto cps = text::decode_utf8(s);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i];
        text::append_utf8(cur, cp);
        const bool western = (cp == '.' || cp == '!' || cp == '?') && (i + 1 == cps.size() || cps[i + 1] == ' ');
        const bool eastern = cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;
        if (western || eastern) {
            std::string t = text::trim(cur);
            if (!t.empty()) out.push_back(std::move(t));
            cur.clear();
        }
    }
    std::string t = text::trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
    return out;
}

struct Unit {
    std::string passage;
    std::string context;
    std::vector<std::size_t> anomalies;  // indices into candidates
    std::optional<std::size_t> run;
    bool sampled = false;
    bool translate = false;
    std::string language;
};

enum class Verdict { kManipulative, kBenign, kError };

struct UnitResult {
    Verdict verdict = Verdict::kError;
    std::string rationale;
    std::string error;
    bool inconsistent = false;
    double overlap = 1.0;
    std::vector<const LexiconEntry*> translated_hits;
    std::string translation_error;
    int calls = 0;
};

std::string clip(std::string_view s, std::size_t max_cp) { return std::string(s.substr(0, text::byte_offset_of(s, max_cp))); }

}  // namespace

SemanticResult semantic_verify(const ExtractedDocument& doc, std::vector<Anomaly> candidates, llm::Gateway& gateway,
                               const llm::PromptLibrary& prompts, const SemanticOptions& options,
                               const CoarseOptions& coarse) {
    const auto runs = build_runs(doc, coarse);
    const std::string dominant = dominant_language(doc);

    auto context_for_run = [&](std::size_t r) {
        std::string ctx;
        for (std::size_t j = r >= 3 ? r - 3 : 0; j < std::min(runs.size(), r + 4); ++j) {
            if (j == r || runs[j].page != runs[r].page) continue;
            if (!ctx.empty()) ctx += '\n';
            ctx += runs[j].text;
        }
        return clip(ctx, options.context_chars);
    };
    auto document_context = [&]() {
        std::string ctx;
        for (std::size_t j = 0; j < std::min<std::size_t>(runs.size(), 6); ++j) ctx += runs[j].text + "\n";
        return clip(ctx, options.context_chars);
    };

    std::vector<Unit> units;
    std::map<std::string, std::size_t> by_passage;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Anomaly& a = candidates[i];
        const std::string key = a.location.metadata_key.empty()
                                    ? fmt::format("p{}:{}", a.location.page, a.passage)
                                    : "m:" + a.location.metadata_key;
        auto it = by_passage.find(key);
        if (it == by_passage.end()) {
            Unit u;
            u.passage = a.passage;
            for (std::size_t r = 0; r < runs.size(); ++r) {
                if (runs[r].page == a.location.page && runs[r].text == a.passage) {
                    u.run = r;
                    break;
                }
            }
            u.context = u.run ? context_for_run(*u.run) : document_context();
            it = by_passage.emplace(key, units.size()).first;
            units.push_back(std::move(u));
        }
        units[it->second].anomalies.push_back(i);
    }
    for (std::size_t r = 0; r < runs.size() && units.size() < options.max_candidates; ++r) {
        if (by_passage.count(fmt::format("p{}:{}", runs[r].page, runs[r].text))) continue;
        for (const auto& sentence : split_sentences(runs[r].text)) {
            if (units.size() >= options.max_candidates) break;
            const std::string key = fmt::format("p{}:s:{}", runs[r].page, sentence);
            if (by_passage.count(key)) continue;
            const std::string lang = guess_language(sentence);
            const bool cjk = lang == "zh" || lang == "ja" || lang == "ko";
            const bool foreign = !lang.empty() && lang != dominant && (cjk || content_words(sentence).size() >= 3);
            const bool directed = looks_reviewer_directed(sentence);
            if (!foreign && !directed) continue;
            Unit u;
            u.passage = sentence;
            u.run = r;
            u.context = context_for_run(r);
            if (u.context.empty()) u.context = clip(runs[r].text, options.context_chars);
            u.sampled = directed;
            u.translate = foreign;
            u.language = lang;
            by_passage.emplace(key, units.size());
            units.push_back(std::move(u));
        }
    }

    auto check = [&](const Unit& u) {
        UnitResult res;
        const auto words = content_words(u.passage);
        if (words.size() >= 3 && !u.context.empty()) {
            const auto ctx_words = content_words(u.context);
            std::size_t shared = 0;
            for (const auto& w : words) shared += ctx_words.count(w);
            res.overlap = static_cast<double>(shared) / static_cast<double>(words.size());
            // too little surrounding text says nothing about topic drift
            res.inconsistent = ctx_words.size() >= 8 && res.overlap < 0.1;
        }
        if (u.sampled || !u.anomalies.empty()) {
            llm::ChatRequest req;
            req.model_id = options.model_id;
            req.max_output_tokens = 256;
            req.messages.push_back(llm::Message{
                llm::Role::kUser,
                prompts.render("injection_check", {{"context", u.context}, {"passage", clip(u.passage, 4000)}})});
            try {
                ++res.calls;
                const auto reply = gateway.complete_structured(req, llm::schemas::kInjectionCheck);
                res.verdict = reply.at("verdict").get<std::string>() == "manipulative" ? Verdict::kManipulative
                                                                                      : Verdict::kBenign;
                res.rationale = reply.value("rationale", "");
            } catch (const Error& e) {
                res.error = e.what();
            }
        }
        if (u.translate) {
            llm::ChatRequest req;
            req.model_id = options.model_id;
            req.max_output_tokens = 1024;
            req.messages.push_back(llm::Message{
                llm::Role::kUser, prompts.render("translate", {{"language", u.language}, {"passage", clip(u.passage, 4000)}})});
            try {
                ++res.calls;
                for (const auto* h : lexicon_hits(gateway.complete(req))) res.translated_hits.push_back(h);
            } catch (const Error& e) {
                res.translation_error = e.what();
            }
        }
        return res;
    };

    std::vector<std::future<UnitResult>> futures;
    futures.reserve(units.size());
    for (const auto& u : units) futures.push_back(std::async(std::launch::async, check, std::cref(u)));
    std::vector<UnitResult> results;
    for (auto& f : futures) results.push_back(f.get());

    SemanticResult out;
    std::vector<bool> drop(candidates.size(), false);
    std::vector<Anomaly> added;
    for (std::size_t k = 0; k < units.size(); ++k) {
        const Unit& u = units[k];
        const UnitResult& r = results[k];
        out.calls += static_cast<std::size_t>(r.calls);
        const std::string context_note =
            r.inconsistent ? fmt::format("off-topic for its surroundings (overlap {:.2f})", r.overlap) : "";
        if (!r.error.empty()) {
            out.degraded = true;
            out.errors.push_back(r.error);
        }
        if (!r.translation_error.empty()) {
            out.degraded = true;
            out.errors.push_back(r.translation_error);
        }
        for (std::size_t idx : u.anomalies) {
            Anomaly& a = candidates[idx];
            auto add_note = [&](const std::string& n) {
                if (n.empty()) return;
                a.note += (a.note.empty() ? "" : "; ") + n;
            };
            switch (r.verdict) {
                case Verdict::kManipulative:
                    a.severity = Severity::kHigh;
                    a.confirmed = true;
                    add_note("confirmed: " + r.rationale);
                    break;
                case Verdict::kBenign:
                    if (a.lexicon) {
                        add_note("model judged benign; lexicon match kept");
                    } else if (a.family == RuleFamily::kMetadata) {
                        drop[idx] = true;
                    } else if (!r.inconsistent) {
                        a.severity = Severity::kLow;
                        add_note("model judged benign");
                    } else {
                        add_note("model judged benign");
                    }
                    break;
                case Verdict::kError:
                    a.severity = std::min(a.severity, Severity::kMedium);
                    add_note("unconfirmed: semantic check failed");
                    break;
            }
            add_note(context_note);
        }
        if (u.sampled && r.verdict == Verdict::kManipulative && u.run) {
            Anomaly a = run_anomaly(runs[*u.run], RuleFamily::kSemantic, Severity::kHigh,
                                    "passage addressed to the reviewer: " + excerpt(u.passage), runs[*u.run].traits);
            a.stage = Stage::kSemantic;
            a.confirmed = true;
            a.note = "confirmed: " + r.rationale;
            if (!context_note.empty()) a.note += "; " + context_note;
            added.push_back(std::move(a));
        }
        if (!r.translated_hits.empty() && u.run) {
            SpanTraits t = runs[*u.run].traits;
            t.foreign_language = true;
            Anomaly a = run_anomaly(runs[*u.run], RuleFamily::kSemantic, Severity::kHigh,
                                    fmt::format("translation from {} contains {}: {}", u.language,
                                                describe_hits(r.translated_hits), excerpt(u.passage)),
                                    t);
            a.stage = Stage::kSemantic;
            a.lexicon = true;
            a.confirmed = true;
            added.push_back(std::move(a));
        }
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!drop[i]) out.anomalies.push_back(std::move(candidates[i]));
    }
    out.anomalies.insert(out.anomalies.end(), std::make_move_iterator(added.begin()),
                         std::make_move_iterator(added.end()));
    return out;
}

// ---------------------------------------------------------------------------
// Scoring and pipeline

std::set<AttackCategory> categorize(const std::vector<Anomaly>& anomalies) {
    std::set<AttackCategory> out;
    for (const auto& a : anomalies) out.insert(a.category_hint);
    return out;
}

double location_weight(const Anomaly& a, const RiskWeights& w) {
    return !a.location.metadata_key.empty() || a.location.invisible_region ? w.hidden_location : w.visible_location;
}

double risk_score(const std::vector<Anomaly>& anomalies, const RiskWeights& w) {
    double total = 0;
    for (const auto& a : anomalies) {
        const auto it = w.category.find(a.category_hint);
        const double cw = it == w.category.end() ? 1.0 : it->second;
        total += severity_weight(a.severity) * cw * location_weight(a, w);
    }
    return total;
}

nlohmann::json to_json(const Anomaly& a) {
    nlohmann::json loc = nlohmann::json::object();
    if (!a.location.metadata_key.empty()) {
        loc["metadata_key"] = a.location.metadata_key;
    } else {
        loc["page"] = a.location.page + 1;
        if (a.location.bbox) {
            const auto& b = *a.location.bbox;
            loc["bbox"] = {std::round(b.x0 * 100) / 100, std::round(b.y0 * 100) / 100, std::round(b.x1 * 100) / 100,
                           std::round(b.y1 * 100) / 100};
        }
        loc["invisible_region"] = a.location.invisible_region;
    }
    nlohmann::json j = {
        {"category", to_string(a.category_hint)},
        {"severity", to_string(a.severity)},
        {"family", to_string(a.family)},
        {"stage", to_string(a.stage)},
        {"location", loc},
        {"evidence", a.evidence},
        {"count", a.count},
        {"lexicon", a.lexicon},
        {"confirmed", a.confirmed},
    };
    if (!a.note.empty()) j["note"] = a.note;
    return j;
}

nlohmann::json to_json(const ScanReport& r) {
    nlohmann::json cats = nlohmann::json::array();
    for (auto c : r.categories) cats.push_back(to_string(c));
    nlohmann::json anomalies = nlohmann::json::array();
    for (const auto& a : r.anomalies) anomalies.push_back(to_json(a));
    return {
        {"schema_version", kReportSchemaVersion},
        {"flagged", r.flagged},
        {"risk_score", r.risk_score},
        {"threshold", r.threshold},
        {"categories", cats},
        {"anomalies", anomalies},
        {"semantic", {{"ran", r.semantic_ran}, {"degraded", r.semantic_degraded}, {"errors", r.semantic_errors}}},
        {"warnings", r.warnings},
    };
}

Scanner::Scanner(llm::Gateway* gateway, const llm::PromptLibrary& prompts, ScanConfig config)
    : gateway_(gateway), prompts_(prompts), config_(std::move(config)) {}

ScanReport Scanner::scan(const ExtractedDocument& doc) const {
    ScanReport report;
    report.threshold = config_.threshold;
    report.warnings = doc.warnings;
    report.anomalies = coarse_scan(doc, config_.coarse);
    if (config_.run_semantic && gateway_) {
        auto sem = semantic_verify(doc, std::move(report.anomalies), *gateway_, prompts_, config_.semantic,
                                   config_.coarse);
        report.anomalies = std::move(sem.anomalies);
        report.semantic_ran = true;
        report.semantic_degraded = sem.degraded;
        report.semantic_errors = std::move(sem.errors);
    }
    report.categories = categorize(report.anomalies);
    report.risk_score = risk_score(report.anomalies, config_.weights);
    report.flagged = report.risk_score >= config_.threshold;
    return report;
}

ScanReport Scanner::scan_pdf(std::string bytes) const { return scan(extract(std::move(bytes))); }

ScanReport Scanner::scan_text(std::string_view body) const { return scan(extract_plain_text(body)); }

}  // namespace peerloop::guard
