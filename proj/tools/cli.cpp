#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "peerloop/common/clock.hpp"
#include "peerloop/common/error.hpp"
#include "peerloop/guard/extract.hpp"
#include "peerloop/guard/synth.hpp"
#include "peerloop/service/api.hpp"
#include "peerloop/service/platform.hpp"
#include "peerloop/service/runtime.hpp"
#include "peerloop/service/server.hpp"

namespace peerloop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
        throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
}

bool is_pdf(std::string_view bytes) { return bytes.rfind("%PDF", 0) == 0; }

service::ServiceConfig config_from(const std::string& path) {
    const auto env = service::process_environment();
    if (!path.empty()) return service::load_config(path, env);
    service::ServiceConfig c;
    service::apply_environment(c, env);
    service::validate(c);
    return c;
}

/// Text of a document given as a PDF or as plain text.
std::string document_text(const std::string& bytes) { return is_pdf(bytes) ? guard::extract(bytes).full_text() : bytes; }

std::string describe(const guard::Anomaly& a) {
    const std::string where =
        a.location.metadata_key.empty() ? fmt::format("p{}", a.location.page + 1) : "meta:" + a.location.metadata_key;
    std::string line = fmt::format("  {} {} {} {}", where, guard::to_string(a.severity), guard::to_string(a.category_hint),
                                   guard::to_string(a.family));
    if (a.confirmed) line += " confirmed";
    std::string evidence = a.evidence.size() > 80 ? a.evidence.substr(0, 77) + "..." : a.evidence;
    return line + ": " + evidence;
}

void print_report(const guard::ScanReport& r, const std::string& file, std::ostream& out) {
    out << "file: " << file << '\n';
    out << "flagged: " << (r.flagged ? "yes" : "no") << '\n';
    out << fmt::format("risk: {:.2f} (threshold {:.2f})\n", r.risk_score, r.threshold);
    std::string cats;
    for (auto c : r.categories) cats += (cats.empty() ? "" : ", ") + std::string(guard::to_string(c));
    out << "categories: " << (cats.empty() ? "none" : cats) << '\n';
    out << "semantic: " << (!r.semantic_ran ? "skipped" : r.semantic_degraded ? "degraded" : "ran") << '\n';
    for (const auto& w : r.warnings) out << "warning: " << w << '\n';
    if (!r.anomalies.empty()) out << "anomalies:\n";
    for (const auto& a : r.anomalies) out << describe(a) << '\n';
}

struct ScanArgs {
    std::string file;
    std::optional<double> threshold;
    bool json = false;
    bool no_semantic = false;
    std::string config;
};

int cmd_scan(const ScanArgs& a, std::ostream& out) {
    const auto config = config_from(a.config);
    auto scan = config.scan;
    if (a.threshold) scan.threshold = *a.threshold;
    if (a.no_semantic) scan.run_semantic = false;
    std::unique_ptr<llm::Gateway> gateway;
    if (scan.run_semantic && !config.backends.empty()) gateway = service::make_gateway(config);
    const llm::PromptLibrary prompts(config.prompts_dir.empty() ? std::nullopt
                                                                : std::optional<fs::path>(config.prompts_dir));
    const guard::Scanner scanner(gateway.get(), prompts, scan);
    auto bytes = read_file(a.file);
    const auto report = is_pdf(bytes) ? scanner.scan_pdf(std::move(bytes)) : scanner.scan_text(bytes);
    if (a.json) {
        auto j = guard::to_json(report);
        j["file"] = a.file;
        out << j.dump(2) << '\n';
    } else {
        print_report(report, a.file, out);
    }
    return report.flagged ? kExitFlagged : kExitOk;
}

struct SynthArgs {
    std::string file;
    std::string category;
    std::uint64_t seed = 1;
    std::string output;
};

int cmd_synthesize(const SynthArgs& a, std::ostream& out) {
    const auto category = guard::category_from_string(a.category);
    if (!category) throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown category '{}'", a.category));
    guard::SynthesisInfo info;
    write_file(a.output, guard::synthesize_attack(read_file(a.file), *category, a.seed, &info));
    out << json{{"output", a.output},
                {"category", guard::to_string(info.category)},
                {"technique", info.technique},
                {"payload", info.payload},
                {"page", info.page}}
               .dump(2)
        << '\n';
    return kExitOk;
}

struct CorpusArgs {
    std::string clean_dir;
    std::string out_dir;
    double attack_rate = 0.35;
    std::uint64_t seed = 1;
    bool json = false;
};

int cmd_corpus(const CorpusArgs& a, std::ostream& out) {
    if (a.attack_rate < 0 || a.attack_rate > 1)
        throw Error(ErrorCode::kInvalidArgument, "attack rate must lie in [0, 1]");
    const auto manifest = guard::write_corpus(a.clean_dir, a.out_dir, a.attack_rate, a.seed);
    if (a.json) {
        out << manifest.dump(2) << '\n';
        return kExitOk;
    }
    out << fmt::format("clean: {}\nattacks: {}\n", manifest["clean_count"].get<std::size_t>(),
                       manifest["attack_count"].get<std::size_t>());
    for (const auto& [category, count] : manifest["histogram"].items())
        out << fmt::format("  {}: {}\n", category, count.get<std::size_t>());
    out << "manifest: " << (fs::path(a.out_dir) / "manifest.json").string() << '\n';
    return kExitOk;
}

int cmd_generate_clean(std::size_t count, const std::string& out_dir, std::uint64_t seed, std::ostream& out) {
    for (std::size_t i = 0; i < count; ++i)
        write_file(fs::path(out_dir) / fmt::format("clean_{:03}.pdf", i), guard::generate_clean_pdf(seed + i));
    out << fmt::format("wrote {} documents to {}\n", count, out_dir);
    return kExitOk;
}

struct ReviewArgs {
    std::string file;
    std::string kind = "proposal";
    std::string mode = "single";
    bool rag = false;
    std::string model;
    std::string config;
};

int cmd_review(const ReviewArgs& a, std::ostream& out) {
    const auto config = config_from(a.config);
    const auto kind = core::kind_from_string(a.kind);
    const auto body = document_text(read_file(a.file));
    auto gateway = service::make_gateway(config);
    const SystemClock clock;
    const auto search = service::make_search(config, clock);
    const llm::PromptLibrary prompts(config.prompts_dir.empty() ? std::nullopt
                                                                : std::optional<fs::path>(config.prompts_dir));
    json result;
    if (a.mode == "single") {
        review::ReviewEngine engine(*gateway, search.get(), prompts, service::review_config(config));
        result = engine.review_single(body, kind, a.model.empty() ? config.models.reviewer : a.model, a.rag);
    } else if (a.mode == "meta") {
        meta::MetaReviewer reviewer(*gateway, search.get(), prompts, service::meta_config(config));
        meta::MetaModels models{config.models.planner, config.models.sub_reviewers, config.models.summarizer};
        if (!a.model.empty()) models.summarizer = a.model;
        result = reviewer.run(body, service::standard_for(config, kind), models, a.rag);
    } else {
        throw Error(ErrorCode::kInvalidArgument, fmt::format("mode must be single or meta, got '{}'", a.mode));
    }
    out << result.dump(2) << '\n';
    return kExitOk;
}

struct BenchArgs {
    std::string pairs;
    std::string model;
    std::string mitigation = "both";
    bool rag = false;
    bool drop_borderline = false;
    std::uint64_t seed = 0;
    bool json = false;
    std::string config;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
    const auto config = config_from(a.config);
    const auto mitigation = pairwise::mitigation_from_string(a.mitigation);
    const auto pairs = pairwise::load_pairs(a.pairs, a.drop_borderline);
    auto gateway = service::make_gateway(config);
    const SystemClock clock;
    const auto search = service::make_search(config, clock);
    const llm::PromptLibrary prompts(config.prompts_dir.empty() ? std::nullopt
                                                                : std::optional<fs::path>(config.prompts_dir));
    pairwise::PairwiseJudge judge(*gateway, search.get(), prompts, service::pairwise_config(config));
    const auto model = a.model.empty() ? config.models.reviewer : a.model;
    const auto result = judge.evaluate_benchmark(pairs, model, mitigation, a.rag, a.seed);
    if (a.json)
        out << json(result).dump(2) << '\n';
    else
        out << pairwise::format_benchmark_table(result, model, mitigation, a.rag);
    return kExitOk;
}

int cmd_serve(const std::string& config_path, std::optional<int> port, std::ostream& out) {
    auto config = config_from(config_path);
    if (port) config.port = *port;

    // Signals are taken synchronously on this thread; block them before any
    // worker thread starts so the workers inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto gateway = service::make_gateway(config);
    const SystemClock clock;
    const auto search = service::make_search(config, clock);
    const llm::PromptLibrary prompts(config.prompts_dir.empty() ? std::nullopt
                                                                : std::optional<fs::path>(config.prompts_dir));
    service::Platform platform(config, *gateway, search.get(), prompts, clock);
    service::Api api(platform);
    service::HttpServer server(api, platform.config());
    const int bound = server.start();
    out << fmt::format("listening on {}:{}", config.host, bound) << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    out << "shutting down" << std::endl;
    server.stop();
    platform.drain();
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Review platform operator tool", "peerloop"};
    app.require_subcommand(1);

    std::string serve_config;
    std::optional<int> serve_port;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("-c,--config", serve_config, "YAML config file");
    serve->add_option("-p,--port", serve_port, "Override the listen port");

    ScanArgs scan_args;
    auto* scan = app.add_subcommand("scan", "Scan a PDF or text file for hidden prompts");
    scan->add_option("file", scan_args.file, "Document to scan")->required()->check(CLI::ExistingFile);
    scan->add_option("--threshold", scan_args.threshold, "Risk threshold");
    scan->add_flag("--json", scan_args.json, "Print the report as JSON");
    scan->add_flag("--no-semantic", scan_args.no_semantic, "Skip the model verification stage");
    scan->add_option("-c,--config", scan_args.config, "YAML config file");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synthesize", "Inject one attack into a clean PDF");
    synth->add_option("file", synth_args.file, "Clean PDF")->required()->check(CLI::ExistingFile);
    synth->add_option("--category", synth_args.category, "WT, MD, IC, ML, SG or CA")->required();
    synth->add_option("--seed", synth_args.seed, "Seed");
    synth->add_option("-o,--out", synth_args.output, "Output PDF")->required();

    CorpusArgs corpus_args;
    auto* corpus = app.add_subcommand("corpus", "Build a labelled corpus from clean PDFs");
    corpus->add_option("--clean-dir", corpus_args.clean_dir, "Directory of clean PDFs")
        ->required()
        ->check(CLI::ExistingDirectory);
    corpus->add_option("--out", corpus_args.out_dir, "Output directory")->required();
    corpus->add_option("--attack-rate", corpus_args.attack_rate, "Attacks per clean document");
    corpus->add_option("--seed", corpus_args.seed, "Seed");
    corpus->add_flag("--json", corpus_args.json, "Print the manifest");

    std::size_t clean_count = 10;
    std::string clean_out;
    std::uint64_t clean_seed = 1;
    auto* gen = app.add_subcommand("generate-clean", "Write synthetic clean PDFs");
    gen->add_option("--count", clean_count, "Number of documents");
    gen->add_option("--out", clean_out, "Output directory")->required();
    gen->add_option("--seed", clean_seed, "First seed");

    ReviewArgs review_args;
    auto* review = app.add_subcommand("review", "Review one document");
    review->add_option("file", review_args.file, "PDF or text file")->required()->check(CLI::ExistingFile);
    review->add_option("--kind", review_args.kind, "proposal or paper");
    review->add_option("--mode", review_args.mode, "single or meta");
    review->add_flag("--rag", review_args.rag, "Ground the review in retrieved literature");
    review->add_option("--model", review_args.model, "Reviewer model (summarizer in meta mode)");
    review->add_option("-c,--config", review_args.config, "YAML config file");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Pairwise accuracy on labelled pairs");
    bench->add_option("--pairs", bench_args.pairs, "JSONL of labelled pairs")->required()->check(CLI::ExistingFile);
    bench->add_option("--model", bench_args.model, "Judge model");
    bench->add_option("--mitigation", bench_args.mitigation, "both or randomize");
    bench->add_flag("--rag", bench_args.rag, "Give the judge retrieved literature");
    bench->add_flag("--drop-borderline", bench_args.drop_borderline, "Skip pairs rated within [5, 6]");
    bench->add_option("--seed", bench_args.seed, "Seed for order randomization");
    bench->add_flag("--json", bench_args.json, "Print the result as JSON");
    bench->add_option("-c,--config", bench_args.config, "YAML config file");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
    }

    try {
        if (*serve) return cmd_serve(serve_config, serve_port, out);
        if (*scan) return cmd_scan(scan_args, out);
        if (*synth) return cmd_synthesize(synth_args, out);
        if (*corpus) return cmd_corpus(corpus_args, out);
        if (*gen) return cmd_generate_clean(clean_count, clean_out, clean_seed, out);
        if (*review) return cmd_review(review_args, out);
        if (*bench) return cmd_bench(bench_args, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

}  // namespace peerloop::cli
