#include "peerloop/core/store.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "peerloop/common/error.hpp"
#include "peerloop/common/ids.hpp"
#include "peerloop/core/submission.hpp"

namespace peerloop::core {

namespace fs = std::filesystem;
using nlohmann::json;

SubmissionStore::SubmissionStore(fs::path data_dir) : dir_(std::move(data_dir)) {
    std::error_code ec;
    fs::create_directories(*dir_ / "blobs", ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create data directory " + dir_->string() + ": " + ec.message());
    load();
    log_file_.open(*dir_ / "events.jsonl", std::ios::app);
    if (!log_file_) throw Error(ErrorCode::kIo, "cannot open event log in " + dir_->string());
}

void SubmissionStore::load() {
    std::uint64_t snapshot_seq = 0;
    const auto snap_path = *dir_ / "snapshot.jsonl";
    if (fs::exists(snap_path)) {
        std::ifstream in(snap_path);
        std::string line;
        if (std::getline(in, line)) snapshot_seq = json::parse(line).at("seq").get<std::uint64_t>();
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto e = std::make_shared<Entry>();
            e->committed = json::parse(line).get<Submission>();
            entries_[e->committed.id] = e;
        }
        seq_ = snapshot_seq;
    }
    const auto log_path = *dir_ / "events.jsonl";
    if (!fs::exists(log_path)) return;
    std::ifstream in(log_path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto ev = json::parse(line).get<Event>();
        seq_ = std::max(seq_, ev.seq);
        if (ev.seq > snapshot_seq) {
            auto& slot = entries_[ev.submission_id];
            if (!slot) slot = std::make_shared<Entry>();
            apply(slot->committed, ev);
        }
        log_.push_back(std::move(ev));
    }
}

std::shared_ptr<SubmissionStore::Entry> SubmissionStore::entry(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(ErrorCode::kNotFound, "unknown submission " + id);
    return it->second;
}

void SubmissionStore::commit(Entry& e, std::vector<Event> pending) {
    Submission next;
    {
        std::shared_lock read(e.read);
        next = e.committed;
    }
    {
        std::lock_guard lock(log_mutex_);
        for (auto& ev : pending) {
            ev.seq = ++seq_;
            apply(next, ev);
            if (log_file_.is_open()) log_file_ << json(ev).dump() << '\n';
            log_.push_back(ev);
        }
        if (log_file_.is_open()) log_file_.flush();
    }
    next.pending_events.clear();
    std::unique_lock write(e.read);
    e.committed = std::move(next);
}

Submission SubmissionStore::insert(Submission created) {
    if (created.pending_events.empty() || created.pending_events.front().type != EventType::kCreated) {
        throw Error(ErrorCode::kInvalidArgument, "insert expects a freshly created submission");
    }
    auto e = std::make_shared<Entry>();
    std::lock_guard w(e->write);
    {
        std::unique_lock lock(map_mutex_);
        if (entries_.count(created.id)) throw Error(ErrorCode::kInvalidArgument, "duplicate id " + created.id);
        entries_[created.id] = e;
    }
    auto pending = std::move(created.pending_events);
    commit(*e, std::move(pending));
    std::shared_lock r(e->read);
    return e->committed;
}

Submission SubmissionStore::mutate(const std::string& id, const std::function<void(Submission&)>& fn) {
    auto e = entry(id);
    std::lock_guard w(e->write);
    Submission working;
    {
        std::shared_lock r(e->read);
        working = e->committed;
    }
    fn(working);
    auto pending = std::move(working.pending_events);
    working.pending_events.clear();
    if (!pending.empty()) commit(*e, std::move(pending));
    std::shared_lock r(e->read);
    return e->committed;
}

Submission SubmissionStore::get(const std::string& id) const {
    auto e = entry(id);
    std::shared_lock r(e->read);
    return e->committed;
}

std::optional<Submission> SubmissionStore::find(const std::string& id) const {
    if (!contains(id)) return std::nullopt;
    return get(id);
}

bool SubmissionStore::contains(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    return entries_.count(id) > 0;
}

std::vector<Submission> SubmissionStore::list_newest_first() const {
    std::vector<Submission> out;
    {
        std::shared_lock lock(map_mutex_);
        out.reserve(entries_.size());
        for (const auto& [id, e] : entries_) {
            std::shared_lock r(e->read);
            out.push_back(e->committed);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Submission& a, const Submission& b) { return a.created_seq > b.created_seq; });
    return out;
}

std::size_t SubmissionStore::size() const {
    std::shared_lock lock(map_mutex_);
    return entries_.size();
}

std::vector<Event> SubmissionStore::events() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

std::uint64_t SubmissionStore::last_seq() const {
    std::lock_guard lock(log_mutex_);
    return seq_;
}

std::string SubmissionStore::snapshot_text() const {
    std::ostringstream out;
    std::shared_lock lock(map_mutex_);
    {
        std::lock_guard l(log_mutex_);
        out << json{{"format", 1}, {"seq", seq_}}.dump() << '\n';
    }
    for (const auto& [id, e] : entries_) {
        std::shared_lock r(e->read);
        out << json(e->committed).dump() << '\n';
    }
    return out.str();
}

void SubmissionStore::checkpoint() {
    if (!dir_) return;
    const auto tmp = *dir_ / "snapshot.jsonl.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << snapshot_text();
        if (!out) throw Error(ErrorCode::kIo, "failed writing snapshot");
    }
    fs::rename(tmp, *dir_ / "snapshot.jsonl");
}

std::unique_ptr<SubmissionStore> SubmissionStore::replay(const std::vector<Event>& events) {
    auto store = std::make_unique<SubmissionStore>();
    for (const auto& ev : events) {
        auto& slot = store->entries_[ev.submission_id];
        if (!slot) slot = std::make_shared<Entry>();
        apply(slot->committed, ev);
        store->seq_ = std::max(store->seq_, ev.seq);
        store->log_.push_back(ev);
    }
    return store;
}

std::string SubmissionStore::put_blob(std::string_view bytes) {
    const auto ref = sha256_hex(bytes);
    std::lock_guard lock(blob_mutex_);
    if (dir_) {
        const auto path = *dir_ / "blobs" / (ref + ".bin");
        if (!fs::exists(path)) {
            std::ofstream out(path, std::ios::binary);
            out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        }
    } else {
        blobs_.emplace(ref, std::string(bytes));
    }
    return ref;
}

std::optional<std::string> SubmissionStore::get_blob(const std::string& ref) const {
    std::lock_guard lock(blob_mutex_);
    if (dir_) {
        std::ifstream in(*dir_ / "blobs" / (ref + ".bin"), std::ios::binary);
        if (!in) return std::nullopt;
        return std::string(std::istreambuf_iterator<char>(in), {});
    }
    auto it = blobs_.find(ref);
    if (it == blobs_.end()) return std::nullopt;
    return it->second;
}

}  // namespace peerloop::core
