#pragma once

#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "peerloop/core/types.hpp"

namespace peerloop::core {

/// Event-sourced submission store.
///
/// Writes are serialized per submission id (single writer per id); reads take
/// a shared lock and observe the last committed state. Every committed state
/// is produced by folding the committed events onto the previous state, so a
/// replay of the log always reconstructs it exactly.
///
/// With a data directory, events are appended to `events.jsonl` as they
/// commit and `checkpoint()` writes `snapshot.jsonl`; opening the same
/// directory loads the snapshot and replays the log tail.
class SubmissionStore {
public:
    SubmissionStore() = default;
    explicit SubmissionStore(std::filesystem::path data_dir);

    SubmissionStore(const SubmissionStore&) = delete;
    SubmissionStore& operator=(const SubmissionStore&) = delete;

    /// Commits a freshly created submission (its pending Created event).
    Submission insert(Submission created);

    /// Runs `fn` on a working copy under the id's write lock and commits the
    /// events it recorded. If `fn` throws, nothing is committed.
    Submission mutate(const std::string& id, const std::function<void(Submission&)>& fn);

    Submission get(const std::string& id) const;  // throws kNotFound
    std::optional<Submission> find(const std::string& id) const;
    bool contains(const std::string& id) const;

    /// Newest first (by creation sequence).
    std::vector<Submission> list_newest_first() const;
    std::size_t size() const;

    std::vector<Event> events() const;
    std::uint64_t last_seq() const;

    /// Canonical snapshot: header line then one submission per line, ordered by id.
    std::string snapshot_text() const;
    void checkpoint();

    /// Rebuilds a store from a raw event sequence.
    static std::unique_ptr<SubmissionStore> replay(const std::vector<Event>& events);

    /// Stores binary content under the data directory (if any); returns its content hash.
    std::string put_blob(std::string_view bytes);
    std::optional<std::string> get_blob(const std::string& ref) const;

private:
    struct Entry {
        std::mutex write;
        mutable std::shared_mutex read;
        Submission committed;
    };

    std::shared_ptr<Entry> entry(const std::string& id) const;
    void commit(Entry& e, std::vector<Event> pending);
    void load();

    std::optional<std::filesystem::path> dir_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;

    mutable std::mutex log_mutex_;
    std::vector<Event> log_;
    std::uint64_t seq_ = 0;
    std::ofstream log_file_;

    mutable std::mutex blob_mutex_;
    std::map<std::string, std::string> blobs_;
};

}  // namespace peerloop::core
